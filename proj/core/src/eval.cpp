#include "uishift/eval.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "json_codec.hpp"
#include "text_util.hpp"
#include "uishift/digest.hpp"
#include "uishift/error.hpp"
#include "uishift/logging.hpp"

namespace uishift {
namespace {

using detail::json;

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct Partial {
  SplitCounts overall;
  std::map<std::string, SplitCounts> splits;

  void add(const SplitCounts& c, const std::vector<std::string>& tags) {
    overall += c;
    for (const auto& t : tags) splits[t] += c;
  }
  void merge(const Partial& o) {
    overall += o.overall;
    for (const auto& [k, v] : o.splits) splits[k] += v;
  }
};

// Counts are integers, so chunked folding merges to the same result in any
// schedule; chunks are still merged in order.
template <typename Record, typename CountFn>
Partial fold(std::span<const Record> records, CountFn count_one) {
  constexpr std::size_t kChunk = 8192;
  if (records.size() <= kChunk) {
    Partial p;
    for (const auto& r : records) p.add(count_one(r), r.tags);
    return p;
  }
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t chunk = std::max(kChunk, (records.size() + workers - 1) / workers);
  std::vector<std::future<Partial>> parts;
  for (std::size_t lo = 0; lo < records.size(); lo += chunk) {
    auto slice = records.subspan(lo, std::min(chunk, records.size() - lo));
    parts.push_back(std::async(std::launch::async, [slice, &count_one] {
      Partial p;
      for (const auto& r : slice) p.add(count_one(r), r.tags);
      return p;
    }));
  }
  Partial total;
  for (auto& f : parts) total.merge(f.get());
  return total;
}

MetricsReport make_report(EvalTask task, Partial p) {
  MetricsReport r;
  r.task = task;
  r.overall = p.overall;
  r.splits = std::move(p.splits);
  r.tool_version = std::string(version());
  return r;
}

std::vector<std::string> read_tags(const json& j, const std::string& file, std::size_t line) {
  std::vector<std::string> tags;
  auto it = j.find("tags");
  if (it == j.end() || it->is_null()) return tags;
  if (!it->is_array()) throw SchemaError(file, line, "tags", "expected array of strings");
  for (const auto& t : *it) {
    if (!t.is_string()) throw SchemaError(file, line, "tags", "expected array of strings");
    tags.push_back(t.get<std::string>());
  }
  return tags;
}

std::string read_id(const json& j, const std::string& file, std::size_t line) {
  auto it = j.find("id");
  if (it == j.end() || !it->is_string()) throw SchemaError(file, line, "id", "expected string");
  return it->get<std::string>();
}

template <typename Fn>
void for_each_line(std::string_view text, const std::string& file, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = detail::trim_ascii(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError(file, line_no, "", "malformed JSON");
    if (!j.is_object()) throw SchemaError(file, line_no, "", "expected object");
    try {
      fn(j, line_no);
    } catch (const detail::FieldError& e) {
      throw SchemaError(file, line_no, e.field, e.what());
    }
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json opt_num(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json counts_to_json(EvalTask task, const SplitCounts& c) {
  json j;
  j["count"] = c.count;
  if (task == EvalTask::kGrounding) {
    j["correct"] = c.grounding_correct;
    j["grounding_accuracy"] = opt_num(c.grounding_accuracy());
    return j;
  }
  j["type_correct"] = c.type_correct;
  j["type_accuracy"] = opt_num(c.type_accuracy());
  j["grounding_total"] = c.grounding_total;
  j["grounding_correct"] = c.grounding_correct;
  j["grounding_accuracy"] = opt_num(c.grounding_accuracy());
  j["success"] = c.success;
  j["success_rate"] = opt_num(c.success_rate());
  return j;
}

std::string csv_num(std::optional<double> v) {
  if (!v) return "";
  std::ostringstream ss;
  ss.precision(17);
  ss << *v;
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::optional<double> SplitCounts::type_accuracy() const { return ratio(type_correct, count); }
std::optional<double> SplitCounts::grounding_accuracy() const { return ratio(grounding_correct, grounding_total); }
std::optional<double> SplitCounts::success_rate() const { return ratio(success, count); }

SplitCounts& SplitCounts::operator+=(const SplitCounts& o) {
  count += o.count;
  type_correct += o.type_correct;
  grounding_total += o.grounding_total;
  grounding_correct += o.grounding_correct;
  success += o.success;
  return *this;
}

std::string_view eval_task_name(EvalTask t) {
  return t == EvalTask::kGrounding ? "grounding" : "automation";
}

std::optional<EvalTask> eval_task_from_name(std::string_view name) {
  if (name == "grounding") return EvalTask::kGrounding;
  if (name == "automation") return EvalTask::kAutomation;
  return std::nullopt;
}

MetricsReport eval_grounding(std::span<const GroundingRecord> records) {
  if (records.empty()) throw InvalidArgumentError("eval_grounding: no records");
  for (const auto& r : records) {
    if (!r.bbox.valid()) throw InvalidArgumentError("record '" + r.id + "' has an invalid bbox");
  }
  auto p = fold(records, [](const GroundingRecord& r) {
    SplitCounts c;
    c.count = 1;
    c.grounding_total = 1;
    c.grounding_correct = r.bbox.contains(r.x, r.y) ? 1 : 0;
    return c;
  });
  return make_report(EvalTask::kGrounding, std::move(p));
}

MetricsReport eval_automation(std::span<const AutomationRecord> records) {
  if (records.empty()) throw InvalidArgumentError("eval_automation: no records");
  for (const auto& r : records) {
    try {
      r.gold.validate();
    } catch (const CorruptGoldError& e) {
      throw CorruptGoldError("record '" + r.id + "': " + e.what());
    }
  }
  auto p = fold(records, [](const AutomationRecord& r) {
    SplitCounts c;
    c.count = 1;
    if (!r.predicted) return c;
    const auto& pred = *r.predicted;
    if (action_type(pred) == action_type(r.gold.action)) c.type_correct = 1;
    if (const auto* click = std::get_if<Click>(&pred); click && std::holds_alternative<Click>(r.gold.action)) {
      c.grounding_total = 1;
      c.grounding_correct = r.gold.bbox->contains(click->x, click->y) ? 1 : 0;
    }
    c.success = match_action(pred, r.gold) ? 1 : 0;
    return c;
  });
  return make_report(EvalTask::kAutomation, std::move(p));
}

std::vector<GroundingRecord> parse_grounding_jsonl(std::string_view text, const std::string& file) {
  std::vector<GroundingRecord> out;
  for_each_line(text, file, [&](const json& j, std::size_t line) {
    GroundingRecord r;
    r.id = read_id(j, file, line);
    auto b = j.find("bbox");
    if (b == j.end()) throw SchemaError(file, line, "bbox", "missing");
    r.bbox = detail::bbox_from_json(*b, "bbox");
    auto p = j.find("point");
    if (p == j.end() || !p->is_array() || p->size() != 2 || !(*p)[0].is_number_integer() ||
        !(*p)[1].is_number_integer()) {
      throw SchemaError(file, line, "point", "expected [x, y] integers");
    }
    r.x = (*p)[0].get<std::int64_t>();
    r.y = (*p)[1].get<std::int64_t>();
    r.tags = read_tags(j, file, line);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<AutomationRecord> parse_automation_jsonl(std::string_view text, const std::string& file) {
  std::vector<AutomationRecord> out;
  for_each_line(text, file, [&](const json& j, std::size_t line) {
    AutomationRecord r;
    r.id = read_id(j, file, line);
    auto g = j.find("gold");
    if (g == j.end() || !g->is_object()) throw SchemaError(file, line, "gold", "expected object");
    auto ga = g->find("action");
    if (ga == g->end()) throw SchemaError(file, line, "gold.action", "missing");
    r.gold.action = detail::action_from_json(*ga, "gold.action");
    if (auto gb = g->find("bbox"); gb != g->end() && !gb->is_null()) {
      r.gold.bbox = detail::bbox_from_json(*gb, "gold.bbox");
    }
    try {
      r.gold.validate();
    } catch (const CorruptGoldError& e) {
      throw CorruptGoldError(file + ":" + std::to_string(line) + ": corrupt record '" + r.id + "': " + e.what());
    }
    auto pred = j.find("predicted");
    auto raw = j.find("output");
    if (pred != j.end() && raw != j.end()) {
      throw SchemaError(file, line, "predicted", "give either 'predicted' or 'output', not both");
    }
    if (pred != j.end()) {
      if (!pred->is_null()) {
        // An unparseable prediction is data, not a schema error.
        r.predicted = parse_action(detail::dump(*pred));
      }
    } else if (raw != j.end()) {
      if (!raw->is_string()) throw SchemaError(file, line, "output", "expected string");
      auto m = j.find("mode");
      if (m == j.end() || !m->is_string()) throw SchemaError(file, line, "mode", "required with 'output'");
      auto mode = reasoning_mode_from_name(m->get<std::string>());
      if (!mode) throw SchemaError(file, line, "mode", "expected 'enabled' or 'free'");
      r.predicted = parse_model_output(raw->get<std::string>(), *mode).answer_action;
    }
    r.tags = read_tags(j, file, line);
    out.push_back(std::move(r));
  });
  return out;
}

MetricsReport eval_file(EvalTask task, const std::filesystem::path& in) {
  auto text = read_file(in);
  MetricsReport r;
  if (task == EvalTask::kGrounding) {
    r = eval_grounding(parse_grounding_jsonl(text, in.string()));
  } else {
    r = eval_automation(parse_automation_jsonl(text, in.string()));
  }
  r.input_digest = sha256_hex(text);
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  json j;
  j["task"] = std::string(eval_task_name(r.task));
  j["tool_version"] = r.tool_version;
  j["input_digest"] = r.input_digest;
  j["overall"] = counts_to_json(r.task, r.overall);
  j["splits"] = json::object();
  for (const auto& [name, c] : r.splits) j["splits"][name] = counts_to_json(r.task, c);
  return j.dump(2);
}

std::string report_to_csv(const MetricsReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const SplitCounts& c) {
    out << csv_field(name) << ',' << c.count << ',';
    if (r.task == EvalTask::kGrounding) {
      out << c.grounding_correct << ',' << csv_num(c.grounding_accuracy()) << '\n';
    } else {
      out << c.type_correct << ',' << csv_num(c.type_accuracy()) << ',' << c.grounding_total << ','
          << c.grounding_correct << ',' << csv_num(c.grounding_accuracy()) << ',' << c.success << ','
          << csv_num(c.success_rate()) << '\n';
    }
  };
  if (r.task == EvalTask::kGrounding) {
    out << "split,count,correct,grounding_accuracy\n";
  } else {
    out << "split,count,type_correct,type_accuracy,grounding_total,grounding_correct,grounding_accuracy,"
           "success,success_rate\n";
  }
  row("overall", r.overall);
  for (const auto& [name, c] : r.splits) row(name, c);
  return out.str();
}

}  // namespace uishift
