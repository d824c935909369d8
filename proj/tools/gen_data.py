#!/usr/bin/env python3
"""Regenerates the data assets under data/.

    python3 tools/gen_data.py data/

Outputs room_pools.json, instructions.json, conceptnet_snapshot.tsv and
detector_vocabulary.txt. The snapshot uses ConceptNet's export conventions
(underscores in multi-word concepts, mixed relation set) so ingest
normalization and relation filtering get exercised on real-looking input.
"""

import json
import sys
from pathlib import Path

HUB = "hallway"

POOLS = {
    "hallway": ["coat rack", "umbrella stand", "doormat", "shoe rack", "mirror",
                "staircase", "runner", "wall clock", "console table", "light switch",
                "picture frame"],
    "bedroom": ["bed", "pillow", "nightstand", "dresser", "wardrobe", "blanket",
                "alarm clock", "lamp", "cushion", "quilt", "headboard", "curtain"],
    "bathroom": ["toilet", "bathtub", "sink", "shower", "towel", "toothbrush",
                 "soap dispenser", "toilet paper", "bath mat", "shower curtain", "mirror"],
    "kitchen": ["refrigerator", "stove", "oven", "microwave", "dishwasher", "kettle",
                "toaster", "cutting board", "sink", "frying pan", "spice rack", "cabinet"],
    "living room": ["sofa", "coffee table", "television", "fireplace", "armchair",
                    "bookshelf", "cushion", "rug", "lamp", "remote control", "plant"],
    "dining room": ["dining table", "chair", "chandelier", "sideboard", "placemat",
                    "vase", "plate", "wine glass", "napkin", "candle"],
    "office": ["desk", "office chair", "computer", "monitor", "keyboard", "printer",
               "filing cabinet", "bookshelf", "desk lamp", "whiteboard", "stapler"],
    "laundry room": ["washing machine", "dryer", "laundry basket", "ironing board", "iron",
                     "detergent", "clothesline", "drying rack", "hamper"],
    "gym": ["treadmill", "dumbbell", "yoga mat", "exercise bike", "weight bench",
            "kettlebell", "jump rope", "punching bag", "water bottle"],
}

TEMPLATES = [
    "go to the {room} and find the {target}",
    "bring me the {target} in the {room}",
    "walk into the {room} and touch the {target} near the {landmark}",
    "find the {target} next to the {landmark} in the {room}",
    "go to the {room} and clean the {target}",
    "in the {room} pick up the {target} by the {landmark}",
]

# Per-object facts beyond AtLocation: (relation, concept).
EXTRA = {
    "coat rack": [("UsedFor", "hanging coats"), ("IsA", "furniture"), ("MadeOf", "wood")],
    "umbrella stand": [("UsedFor", "storing umbrellas"), ("LocatedNear", "door")],
    "doormat": [("LocatedNear", "door"), ("UsedFor", "wiping feet")],
    "shoe rack": [("UsedFor", "storing shoes"), ("IsA", "furniture")],
    "mirror": [("MadeOf", "glass"), ("UsedFor", "seeing reflection"), ("AtLocation", "store")],
    "staircase": [("PartOf", "house"), ("UsedFor", "going upstairs"), ("HasA", "step")],
    "runner": [("IsA", "rug"), ("LocatedNear", "staircase")],
    "wall clock": [("UsedFor", "telling time"), ("IsA", "clock")],
    "console table": [("IsA", "table"), ("LocatedNear", "wall")],
    "light switch": [("PartOf", "wall"), ("UsedFor", "turning on light")],
    "picture frame": [("UsedFor", "displaying photo"), ("MadeOf", "wood")],
    "bed": [("UsedFor", "sleeping"), ("IsA", "furniture"), ("HasA", "mattress"),
            ("AtLocation", "hotel")],
    "pillow": [("UsedFor", "resting head"), ("LocatedNear", "bed"), ("MadeOf", "feather")],
    "nightstand": [("LocatedNear", "bed"), ("IsA", "table")],
    "dresser": [("UsedFor", "storing clothes"), ("HasA", "drawer"), ("IsA", "furniture")],
    "wardrobe": [("UsedFor", "storing clothes"), ("IsA", "furniture"), ("MadeOf", "wood")],
    "blanket": [("UsedFor", "keeping warm"), ("MadeOf", "wool")],
    "alarm clock": [("UsedFor", "waking up"), ("IsA", "clock"), ("LocatedNear", "nightstand")],
    "lamp": [("UsedFor", "light"), ("HasA", "bulb"), ("AtLocation", "desk")],
    "cushion": [("LocatedNear", "sofa"), ("MadeOf", "fabric"), ("UsedFor", "comfort")],
    "quilt": [("IsA", "blanket"), ("MadeOf", "fabric")],
    "headboard": [("PartOf", "bed")],
    "curtain": [("LocatedNear", "window"), ("MadeOf", "fabric")],
    "toilet": [("UsedFor", "relieving yourself"), ("MadeOf", "porcelain")],
    "bathtub": [("UsedFor", "bathing"), ("HasA", "faucet"), ("MadeOf", "porcelain")],
    "sink": [("HasA", "faucet"), ("UsedFor", "washing hands"), ("MadeOf", "porcelain")],
    "shower": [("UsedFor", "washing"), ("HasA", "faucet")],
    "towel": [("UsedFor", "drying"), ("MadeOf", "cotton")],
    "toothbrush": [("UsedFor", "brushing teeth"), ("LocatedNear", "sink")],
    "soap dispenser": [("LocatedNear", "sink"), ("UsedFor", "washing hands")],
    "toilet paper": [("LocatedNear", "toilet"), ("MadeOf", "paper")],
    "bath mat": [("LocatedNear", "bathtub"), ("IsA", "rug")],
    "shower curtain": [("PartOf", "shower"), ("MadeOf", "plastic")],
    "refrigerator": [("UsedFor", "keeping food cold"), ("IsA", "appliance"), ("HasA", "door")],
    "stove": [("UsedFor", "cooking"), ("IsA", "appliance"), ("LocatedNear", "oven")],
    "oven": [("UsedFor", "baking"), ("IsA", "appliance"), ("HasA", "door")],
    "microwave": [("UsedFor", "heating food"), ("IsA", "appliance")],
    "dishwasher": [("UsedFor", "washing dishes"), ("IsA", "appliance")],
    "kettle": [("UsedFor", "boiling water"), ("MadeOf", "metal")],
    "toaster": [("UsedFor", "making toast"), ("IsA", "appliance")],
    "cutting board": [("UsedFor", "cutting food"), ("MadeOf", "wood")],
    "frying pan": [("UsedFor", "cooking"), ("MadeOf", "metal"), ("LocatedNear", "stove")],
    "spice rack": [("UsedFor", "storing spices")],
    "cabinet": [("HasA", "door"), ("IsA", "furniture"), ("AtLocation", "bathroom")],
    "sofa": [("UsedFor", "sitting"), ("IsA", "furniture"), ("HasA", "cushion")],
    "coffee table": [("IsA", "table"), ("LocatedNear", "sofa")],
    "television": [("UsedFor", "watching movies"), ("IsA", "appliance"), ("HasA", "screen")],
    "fireplace": [("UsedFor", "keeping warm"), ("MadeOf", "brick"), ("HasA", "chimney")],
    "armchair": [("IsA", "chair"), ("UsedFor", "sitting")],
    "bookshelf": [("UsedFor", "storing books"), ("MadeOf", "wood"), ("IsA", "furniture")],
    "rug": [("LocatedNear", "floor"), ("MadeOf", "wool")],
    "remote control": [("UsedFor", "changing channels"), ("LocatedNear", "television")],
    "plant": [("HasA", "leaf"), ("AtLocation", "garden"), ("LocatedNear", "window")],
    "dining table": [("IsA", "table"), ("UsedFor", "eating"), ("MadeOf", "wood")],
    "chair": [("UsedFor", "sitting"), ("IsA", "furniture"), ("AtLocation", "office")],
    "chandelier": [("UsedFor", "light"), ("HasA", "bulb"), ("MadeOf", "crystal")],
    "sideboard": [("IsA", "furniture"), ("HasA", "drawer")],
    "placemat": [("LocatedNear", "plate"), ("MadeOf", "fabric")],
    "vase": [("UsedFor", "holding flowers"), ("MadeOf", "glass")],
    "plate": [("UsedFor", "eating"), ("MadeOf", "porcelain"), ("AtLocation", "kitchen")],
    "wine glass": [("MadeOf", "glass"), ("UsedFor", "drinking wine")],
    "napkin": [("UsedFor", "wiping mouth"), ("MadeOf", "paper")],
    "candle": [("UsedFor", "light"), ("MadeOf", "wax")],
    "desk": [("UsedFor", "working"), ("IsA", "table"), ("HasA", "drawer")],
    "office chair": [("IsA", "chair"), ("HasA", "wheel"), ("LocatedNear", "desk")],
    "computer": [("UsedFor", "working"), ("HasA", "screen"), ("IsA", "machine")],
    "monitor": [("PartOf", "computer"), ("HasA", "screen")],
    "keyboard": [("PartOf", "computer"), ("HasA", "key")],
    "printer": [("UsedFor", "printing"), ("IsA", "machine"), ("MadeOf", "plastic")],
    "filing cabinet": [("UsedFor", "storing documents"), ("HasA", "drawer")],
    "desk lamp": [("IsA", "lamp"), ("LocatedNear", "desk")],
    "whiteboard": [("UsedFor", "writing"), ("AtLocation", "school")],
    "stapler": [("UsedFor", "stapling paper"), ("LocatedNear", "desk")],
    "washing machine": [("UsedFor", "washing clothes"), ("IsA", "appliance"), ("HasA", "door")],
    "dryer": [("UsedFor", "drying clothes"), ("IsA", "appliance"),
              ("LocatedNear", "washing machine")],
    "laundry basket": [("UsedFor", "carrying clothes"), ("MadeOf", "plastic")],
    "ironing board": [("UsedFor", "ironing clothes"), ("LocatedNear", "iron")],
    "iron": [("UsedFor", "ironing clothes"), ("MadeOf", "metal")],
    "detergent": [("UsedFor", "washing clothes"), ("AtLocation", "store")],
    "clothesline": [("UsedFor", "drying clothes"), ("AtLocation", "backyard")],
    "drying rack": [("UsedFor", "drying clothes")],
    "hamper": [("UsedFor", "holding dirty clothes"), ("IsA", "basket")],
    "treadmill": [("UsedFor", "running"), ("IsA", "machine")],
    "dumbbell": [("UsedFor", "lifting weights"), ("MadeOf", "metal")],
    "yoga mat": [("UsedFor", "yoga"), ("MadeOf", "rubber")],
    "exercise bike": [("UsedFor", "exercise"), ("IsA", "machine"), ("HasA", "pedal")],
    "weight bench": [("UsedFor", "lifting weights"), ("LocatedNear", "dumbbell")],
    "kettlebell": [("UsedFor", "exercise"), ("MadeOf", "iron")],
    "jump rope": [("UsedFor", "exercise")],
    "punching bag": [("UsedFor", "boxing"), ("MadeOf", "leather")],
    "water bottle": [("UsedFor", "drinking water"), ("MadeOf", "plastic")],
}

ROOM_FACTS = [
    ("bedroom", "PartOf", "house"), ("bedroom", "UsedFor", "sleeping"),
    ("bathroom", "PartOf", "house"), ("bathroom", "UsedFor", "bathing"),
    ("kitchen", "PartOf", "house"), ("kitchen", "UsedFor", "cooking"),
    ("living room", "PartOf", "house"), ("living room", "UsedFor", "relaxing"),
    ("dining room", "PartOf", "house"), ("dining room", "UsedFor", "eating"),
    ("office", "UsedFor", "working"), ("office", "IsA", "room"),
    ("laundry room", "UsedFor", "washing clothes"), ("laundry room", "IsA", "room"),
    ("gym", "UsedFor", "exercise"), ("gym", "IsA", "room"),
    ("hallway", "PartOf", "house"), ("hallway", "LocatedNear", "door"),
    ("hallway", "RelatedTo", "corridor"), ("dining room", "LocatedNear", "kitchen"),
]

# Relations outside the default relation set; ingest must drop these.
FILTERED = [
    ("bed", "Synonym", "cot"), ("sofa", "Synonym", "couch"), ("hot", "Antonym", "cold"),
    ("lamp", "CapableOf", "illuminate room"), ("kettle", "CapableOf", "whistle"),
    ("cat", "Desires", "warm place"), ("person", "Desires", "comfort"),
    ("television", "CapableOf", "show pictures"), ("refrigerator", "Synonym", "fridge"),
    ("sleeping", "HasSubevent", "dreaming"), ("cooking", "MotivatedByGoal", "eating"),
    ("oven", "ReceivesAction", "heated"), ("towel", "HasProperty", "absorbent"),
    ("chair", "HasProperty", "comfortable"), ("desk", "DerivedFrom", "dais"),
]

EXTRA_NOUNS = """
man woman person boy girl child baby people player skier surfer rider hand arm leg
foot head face eye ear nose mouth hair neck shoulder finger knee shirt jacket coat
pants jeans shorts dress skirt hat cap helmet glove boot shoe sock scarf tie belt
glasses sunglasses watch bracelet necklace ring backpack purse handbag wallet bag
suitcase umbrella sky cloud sun moon star tree grass bush flower leaf branch trunk
rock stone sand dirt mud snow ice water wave ocean sea lake river pond beach shore
hill mountain field forest park garden yard fence gate wall floor ceiling roof
window door doorway frame shelf drawer handle knob hinge lock key post pole sign
street road sidewalk crosswalk curb lane track railroad bridge tunnel tower building
house apartment skyscraper church castle barn shed tent bench statue fountain
car truck bus van taxi motorcycle bicycle bike scooter train boat ship sailboat
airplane jet helicopter wheel tire engine windshield mirror seat headlight license plate
traffic light stop sign parking meter fire hydrant street light lamppost billboard
dog cat horse cow sheep goat pig bird duck chicken goose pigeon seagull elephant
zebra giraffe bear lion tiger monkey deer rabbit squirrel mouse fish turtle frog
snake butterfly bee ant spider pizza sandwich burger hot dog donut cake cookie
bread toast bagel muffin pie cheese egg bacon sausage meat chicken wing steak rice
pasta noodle soup salad tomato potato carrot onion pepper lettuce cucumber broccoli
corn mushroom apple banana orange lemon lime grape strawberry cherry peach pear
watermelon pineapple coconut nut coffee tea milk juice beer wine soda cup mug glass
bowl fork knife spoon chopstick spatula ladle whisk pot pan lid tray basket box
bucket jar bottle can carton container bin trash can recycling bin newspaper
magazine book notebook paper envelope letter card poster picture photo painting
drawing map calendar clock phone cellphone tablet laptop mouse pad cable cord wire
plug outlet charger battery speaker headphones microphone camera tripod radio remote
light bulb flashlight candle holder lantern fan heater air conditioner radiator vent
blinds shade shutter pillowcase sheet mattress comforter duvet bedspread crib cradle
high chair stool bench couch loveseat ottoman recliner beanbag hammock swing slide
toy doll teddy bear ball kite frisbee skateboard surfboard snowboard ski racket bat
glove net goal hoop trophy medal flag banner tag label sticker ribbon bow button
zipper pocket collar sleeve hood cuff strap buckle lace heel sole handlebar pedal
chain gear bolt screw nail hammer screwdriver wrench drill saw ladder shovel rake
hose sprinkler wheelbarrow lawn mower flowerpot soil seed pumpkin hay straw log
firewood chimney smoke fire flame ash grill barbecue cooler picnic table blanket
towel rack toothpaste soap shampoo lotion razor comb hairbrush hair dryer makeup
perfume tissue cotton sponge scrubber mop broom dustpan vacuum cleaner duster rag
laundry clothes hanger closet cupboard pantry counter countertop backsplash faucet
drain tile grout marble granite wood metal plastic fabric leather wool silk linen
velvet carpet mat tablecloth coaster placemat centerpiece bouquet wreath ornament
candlestick figurine sculpture clock tower pillar column arch balcony porch deck
patio terrace railing banister step stairs elevator escalator corridor lobby
reception desk counter cash register menu tray table booth bar stool wine bottle
keg barrel crate pallet cart trolley stroller wheelchair crutch cane umbrella stand
mailbox doorbell intercom thermostat smoke detector sprinkler head exit sign
fire extinguisher first aid kit safe vault locker cubicle partition screen projector
podium blackboard chalk marker eraser pen pencil crayon ruler scissors glue tape
folder binder clipboard calculator globe atlas dictionary encyclopedia textbook
antenna awning bale bandana barrette basin beam bib blazer blouse boulder bracket
brick cabin canopy canvas cardigan ceiling light chimney sweep cloth coil cone
cork costume cot counter stool cowboy crown cushion cover dial dome drain pipe
drape easel elbow emblem fender fin fleece flip flop flowerbed foam footboard
fork lift gazebo gravel gutter hallway light hedge hubcap jersey kiosk lampshade
lantern post lattice leash lid logo manhole mast mattress pad meadow mesh
mitten mosaic moss nozzle oar outfit overpass paddle pail pane pavement petal
pier pipe planter plank plaque platform plume pouch propeller puddle rafter
ramp rim robe rooftop rope runway sail scaffold sconce shingle shrub sill
silo skylight slipper sneaker spoke sweater tarp teapot thermos trellis tripod
trough tulip turban valve vest visor wagon weathervane wetsuit whisker windmill
""".split("\n")


def normalize(label):
    return " ".join(label.replace("_", " ").lower().split())


def concept_token(label):
    return label.replace(" ", "_")


def build_snapshot():
    lines = []
    for room, objects in POOLS.items():
        for obj in objects:
            lines.append((obj, "AtLocation", room))
    for obj, facts in EXTRA.items():
        for rel, other in facts:
            lines.append((obj, rel, other))
    lines.extend(ROOM_FACTS)
    lines.extend(FILTERED)
    seen = set()
    out = []
    for s, r, e in lines:
        key = (normalize(s), r, normalize(e))
        if key in seen or key[0] == key[2]:
            continue
        seen.add(key)
        out.append(f"{concept_token(s)}\t{r}\t{concept_token(e)}")
    return out


def build_vocabulary():
    from torchvision.models import ResNet50_Weights
    from torchvision.models.detection import FasterRCNN_ResNet50_FPN_Weights

    ordered = []
    seen = set()

    def push(label):
        label = normalize(label)
        if not label or label in seen or label == "n/a" or label == "__background__":
            return
        seen.add(label)
        ordered.append(label)

    for room, objects in POOLS.items():
        push(room)
        for obj in objects:
            push(obj)
    for line in EXTRA_NOUNS:
        # Multi-word nouns in the list are only those joined by a single space
        # inside known pairs; everything else splits into single words.
        words = line.split()
        i = 0
        while i < len(words):
            pair = " ".join(words[i:i + 2])
            if pair in MULTI:
                push(pair)
                i += 2
            else:
                push(words[i])
                i += 1
    for label in FasterRCNN_ResNet50_FPN_Weights.COCO_V1.meta["categories"]:
        push(label)
    for label in ResNet50_Weights.IMAGENET1K_V1.meta["categories"]:
        push(label)
        if len(ordered) >= 1600:
            break
    assert len(ordered) >= 1600, len(ordered)
    return ordered[:1600]


MULTI = {
    "license plate", "traffic light", "stop sign", "parking meter", "fire hydrant",
    "street light", "hot dog", "chicken wing", "trash can", "recycling bin", "mouse pad",
    "light bulb", "air conditioner", "high chair", "teddy bear", "lawn mower",
    "picnic table", "towel rack", "hair dryer", "vacuum cleaner", "clock tower",
    "reception desk", "bar stool", "wine bottle", "umbrella stand", "smoke detector",
    "sprinkler head", "exit sign", "fire extinguisher", "first aid", "candle holder",
}


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    pools = {
        "schema_version": 1,
        "hub_room": HUB,
        "rooms": [{"label": room, "objects": objects} for room, objects in POOLS.items()],
    }
    (out / "room_pools.json").write_text(json.dumps(pools, indent=2) + "\n")
    (out / "instructions.json").write_text(
        json.dumps({"schema_version": 1, "templates": TEMPLATES}, indent=2) + "\n")
    (out / "conceptnet_snapshot.tsv").write_text("\n".join(build_snapshot()) + "\n")
    (out / "detector_vocabulary.txt").write_text("\n".join(build_vocabulary()) + "\n")


if __name__ == "__main__":
    main()
