#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "ack/error.hpp"
#include "ack/knowledge_base.hpp"

namespace ack::kb {

namespace {

std::string concept_token(const std::string& label) {
  std::string out = label;
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<KnowledgeTriple> parse_conceptnet_response(std::string_view body,
                                                       const std::vector<std::string>& relation_set,
                                                       std::size_t* skipped) {
  nlohmann::json doc = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::ParseError, "response is not a JSON object");
  }
  std::vector<KnowledgeTriple> out;
  std::size_t bad = 0;
  const auto edges = doc.value("edges", nlohmann::json::array());
  for (const auto& edge : edges) {
    try {
      const auto& start = edge.at("start");
      const auto& end = edge.at("end");
      if (start.value("language", "en") != "en" || end.value("language", "en") != "en") {
        ++bad;
        continue;
      }
      KnowledgeTriple t{normalize_label(start.at("label").get<std::string>()),
                        edge.at("rel").at("label").get<std::string>(),
                        normalize_label(end.at("label").get<std::string>())};
      bool in_set = std::find(relation_set.begin(), relation_set.end(), t.relation) != relation_set.end();
      if (t.start.empty() || t.end.empty() || t.start == t.end || !in_set) {
        ++bad;
        continue;
      }
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      std::clog << "conceptnet: skipping record: " << e.what() << '\n';
      ++bad;
    }
  }
  if (skipped) *skipped += bad;
  return out;
}

RemoteKnowledgeClient::RemoteKnowledgeClient(RemoteOptions options) : options_(std::move(options)) {}

std::filesystem::path RemoteKnowledgeClient::cache_path(const std::string& label,
                                                        const std::string& relation) const {
  return options_.cache_dir / (concept_token(normalize_label(label)) + "__" + relation + ".json");
}

std::string RemoteKnowledgeClient::request(const std::string& label, const std::string& relation) {
  if (!options_.allow_network) {
    throw Error(ErrorCode::NetworkError, "network disabled and no cached response for '" + label + "' " + relation);
  }
  httplib::Client client(options_.endpoint);
  auto secs = options_.timeout.count() / 1000;
  auto usecs = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  std::string target = "/query?node=/c/en/" + concept_token(label) + "&rel=/r/" + relation +
                       "&limit=" + std::to_string(options_.limit);
  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++network_attempts_;
    auto res = client.Get(target);
    if (res && res->status == 200) return res->body;
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
  }
  throw Error(ErrorCode::NetworkError, options_.endpoint + target + " failed after " +
                                           std::to_string(options_.max_retries) + " retries: " + last_error);
}

std::vector<KnowledgeTriple> RemoteKnowledgeClient::fetch(const std::set<std::string>& concepts,
                                                          const std::vector<std::string>& relation_set) {
  std::vector<KnowledgeTriple> out;
  for (const auto& raw : concepts) {
    const std::string label = normalize_label(raw);
    for (const auto& relation : relation_set) {
      const auto path = cache_path(label, relation);
      std::string body;
      if (auto cached = read_file(path)) {
        ++cache_hits_;
        body = std::move(*cached);
      } else {
        body = request(label, relation);
        write_atomic(path, body);
      }
      std::size_t skipped = 0;
      auto triples = parse_conceptnet_response(body, relation_set, &skipped);
      skipped_records_ += skipped;
      out.insert(out.end(), std::make_move_iterator(triples.begin()), std::make_move_iterator(triples.end()));
    }
  }
  return out;
}

}  // namespace ack::kb
