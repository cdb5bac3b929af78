#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

#include "uishift/action.hpp"

namespace uishift {

// Read-only pair_id -> gold lookup shared by every request.
using PairIndex = std::unordered_map<std::string, GoldTarget>;

// Loads a pair JSONL file. Duplicate ids throw InvalidArgumentError.
PairIndex load_pair_index(const std::filesystem::path& file);

struct ServiceConfig {
  double std_floor = 1e-6;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Wire handlers, callable without a socket.
//
// POST /v1/score
//   {"mode": "enabled"|"free", "advantages": bool (default true),
//    "gate_accuracy_on_format": bool (default false),
//    "items": [{"pair_id": str | "gold": {"action", "bbox"}, "samples": [str]}]}
//   -> {"service_version", "request_digest",
//       "items": [{"rewards": [{"r_format","r_accuracy","total"}], "advantages"?: [num]}
//                 | {"error": str}]}
//   Advantages appear when requested and the item has at least 2 samples.
//
// POST /v1/advantages
//   {"groups": [[num]], "std_floor"?: num}
//   -> {"service_version", "request_digest", "groups": [{"advantages": [num]} | {"error": str}]}
//
// A malformed request body yields status 400 and {"error": str}. Item-level
// problems (unknown pair_id, bad gold, no samples) only fail their own entry.
HttpReply handle_score(std::string_view body, const PairIndex& pairs, const ServiceConfig& cfg);
HttpReply handle_advantages(std::string_view body, const ServiceConfig& cfg);
HttpReply handle_health(const PairIndex& pairs);

// sha256 of the request's canonical form (keys sorted, compact), so
// semantically identical bodies share a digest.
std::string request_digest(std::string_view body);

class RewardServer {
 public:
  RewardServer(PairIndex pairs, ServiceConfig cfg);
  ~RewardServer();
  RewardServer(const RewardServer&) = delete;
  RewardServer& operator=(const RewardServer&) = delete;

  // "host:port"; port 0 picks a free port. Returns the bound port. Throws
  // Error when the address is malformed or cannot be bound.
  int bind(std::string_view address);
  // Blocks until stop().
  void run();
  void stop();
  std::size_t pair_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace uishift
