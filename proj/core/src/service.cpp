#include "uishift/service.hpp"

#include <charconv>

#include "httplib.h"
#include "json_codec.hpp"
#include "log.hpp"
#include "uishift/digest.hpp"
#include "uishift/error.hpp"
#include "uishift/grpo.hpp"
#include "uishift/logging.hpp"
#include "uishift/reward.hpp"
#include "uishift/transition.hpp"

namespace uishift {
namespace {

using detail::json;

HttpReply bad_request(const std::string& what) {
  json j;
  j["error"] = what;
  return {400, detail::dump(j)};
}

json item_error(const std::string& what) {
  json j;
  j["error"] = what;
  return j;
}

bool flag(const json& req, const char* key, bool fallback) {
  auto it = req.find(key);
  if (it == req.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw InvalidArgumentError(std::string("'") + key + "' must be a boolean");
  return it->get<bool>();
}

json breakdown_to_json(const RewardBreakdown& b) {
  json j;
  j["r_format"] = b.r_format;
  j["r_accuracy"] = b.r_accuracy;
  j["total"] = b.total;
  return j;
}

json score_item(const json& item, const PairIndex& pairs, const RewardOptions& opts, bool want_adv,
                double std_floor, std::size_t index) {
  if (!item.is_object()) return item_error("item must be an object");
  GoldTarget gold;
  auto pid = item.find("pair_id");
  auto g = item.find("gold");
  if ((pid != item.end()) == (g != item.end())) return item_error("item needs exactly one of 'pair_id' or 'gold'");
  if (pid != item.end()) {
    if (!pid->is_string()) return item_error("'pair_id' must be a string");
    auto it = pairs.find(pid->get<std::string>());
    if (it == pairs.end()) return item_error("unknown pair_id '" + pid->get<std::string>() + "'");
    gold = it->second;
  } else {
    try {
      gold = detail::gold_from_json(*g, "gold");
    } catch (const detail::FieldError& e) {
      return item_error("field '" + e.field + "': " + e.what());
    }
  }
  auto s = item.find("samples");
  if (s == item.end() || !s->is_array() || s->empty()) return item_error("'samples' must be a non-empty array");
  std::vector<std::string> samples;
  samples.reserve(s->size());
  for (const auto& v : *s) {
    if (!v.is_string()) return item_error("samples must be strings");
    samples.push_back(v.get<std::string>());
  }

  auto rewards = score_group(samples, gold, opts);
  json out;
  if (pid != item.end()) out["pair_id"] = *pid;
  out["rewards"] = json::array();
  for (const auto& b : rewards) out["rewards"].push_back(breakdown_to_json(b));
  if (want_adv && rewards.size() >= 2) {
    out["advantages"] = normalize_advantages(totals(rewards), std_floor);
  }
  log::debug("score item {}: {} samples", index, samples.size());
  return out;
}

std::pair<std::string, int> split_address(std::string_view address) {
  auto colon = address.rfind(':');
  if (colon == std::string_view::npos) throw Error("bind address must be host:port");
  std::string host(address.substr(0, colon));
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  auto port_text = address.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (host.empty() || ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 ||
      port > 65535) {
    throw Error("invalid bind address '" + std::string(address) + "'");
  }
  return {host, port};
}

}  // namespace

PairIndex load_pair_index(const std::filesystem::path& file) {
  PairIndex index;
  for (auto& p : read_pairs(file)) {
    auto id = p.pair_id;
    if (!index.emplace(id, std::move(p.gold)).second) {
      throw InvalidArgumentError("duplicate pair_id '" + id + "' in " + file.string());
    }
  }
  return index;
}

std::string request_digest(std::string_view body) {
  auto canonical = nlohmann::json::parse(body, nullptr, false);
  if (canonical.is_discarded()) return sha256_hex(body);
  return sha256_hex(canonical.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

HttpReply handle_score(std::string_view body, const PairIndex& pairs, const ServiceConfig& cfg) {
  auto req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return bad_request("request must be a JSON object");
  RewardOptions opts;
  bool want_adv = true;
  try {
    auto m = req.find("mode");
    if (m == req.end() || !m->is_string()) return bad_request("'mode' must be \"enabled\" or \"free\"");
    auto mode = reasoning_mode_from_name(m->get<std::string>());
    if (!mode) return bad_request("'mode' must be \"enabled\" or \"free\"");
    opts.mode = *mode;
    opts.gate_accuracy_on_format = flag(req, "gate_accuracy_on_format", false);
    want_adv = flag(req, "advantages", true);
  } catch (const InvalidArgumentError& e) {
    return bad_request(e.what());
  }
  auto items = req.find("items");
  if (items == req.end() || !items->is_array()) return bad_request("'items' must be an array");

  json out;
  out["service_version"] = std::string(version());
  out["request_digest"] = request_digest(body);
  out["items"] = json::array();
  for (std::size_t i = 0; i < items->size(); ++i) {
    out["items"].push_back(score_item((*items)[i], pairs, opts, want_adv, cfg.std_floor, i));
  }
  return {200, detail::dump(out)};
}

HttpReply handle_advantages(std::string_view body, const ServiceConfig& cfg) {
  auto req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return bad_request("request must be a JSON object");
  double floor = cfg.std_floor;
  if (auto f = req.find("std_floor"); f != req.end() && !f->is_null()) {
    if (!f->is_number() || !(f->get<double>() > 0.0)) return bad_request("'std_floor' must be a positive number");
    floor = f->get<double>();
  }
  auto groups = req.find("groups");
  if (groups == req.end() || !groups->is_array()) return bad_request("'groups' must be an array");

  json out;
  out["service_version"] = std::string(version());
  out["request_digest"] = request_digest(body);
  out["groups"] = json::array();
  for (const auto& g : *groups) {
    if (!g.is_array() || !std::all_of(g.begin(), g.end(), [](const json& v) { return v.is_number(); })) {
      out["groups"].push_back(item_error("group must be an array of numbers"));
      continue;
    }
    std::vector<double> rewards;
    for (const auto& v : g) rewards.push_back(v.get<double>());
    try {
      json entry;
      entry["advantages"] = normalize_advantages(rewards, floor);
      out["groups"].push_back(std::move(entry));
    } catch (const InvalidArgumentError& e) {
      out["groups"].push_back(item_error(e.what()));
    }
  }
  return {200, detail::dump(out)};
}

HttpReply handle_health(const PairIndex& pairs) {
  json j;
  j["status"] = "ok";
  j["ready"] = true;
  j["version"] = std::string(version());
  j["pairs_loaded"] = pairs.size();
  return {200, detail::dump(j)};
}

struct RewardServer::Impl {
  PairIndex pairs;
  ServiceConfig cfg;
  httplib::Server server;
};

RewardServer::RewardServer(PairIndex pairs, ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  if (!(cfg.std_floor > 0.0)) throw InvalidArgumentError("std_floor must be > 0");
  impl_->pairs = std::move(pairs);
  impl_->cfg = cfg;
  auto* self = impl_.get();
  auto reply = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  self->server.Post("/v1/score", [self, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_score(req.body, self->pairs, self->cfg));
  });
  self->server.Post("/v1/advantages", [self, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_advantages(req.body, self->cfg));
  });
  self->server.Get("/healthz", [self, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health(self->pairs));
  });
  self->server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    json j;
    j["error"] = what;
    res.set_content(detail::dump(j), "application/json");
  });
}

RewardServer::~RewardServer() { stop(); }

int RewardServer::bind(std::string_view address) {
  auto [host, port] = split_address(address);
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error("cannot bind " + std::string(address));
  log::info("reward service bound to {}:{}", host, bound);
  return bound;
}

void RewardServer::run() { impl_->server.listen_after_bind(); }

void RewardServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::size_t RewardServer::pair_count() const { return impl_->pairs.size(); }

}  // namespace uishift
