#include "stsn/eval/report.hpp"

#include <cstdio>

#include <json.hpp>

namespace stsn {

namespace {

using nlohmann::ordered_json;

ordered_json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

ordered_json counts_json(const Counts& c) { return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}}; }

ordered_json task_json(const TaskMetrics& t) {
  ordered_json per_type = ordered_json::object();
  for (const auto& [type, c] : t.per_type) per_type[type] = counts_json(c);
  return {{"micro", prf_json(t.micro)},
          {"macro", prf_json(t.macro)},
          {"counts", counts_json(t.counts)},
          {"per_type", per_type},
          {"predicted_only_types", t.predicted_only_types}};
}

ordered_json report_json(const MetricsReport& r) {
  return {{"sentences", r.sentences},
          {"ner", task_json(r.ner)},
          {"re", task_json(r.re)},
          {"re_plus", task_json(r.re_plus)}};
}

std::string row(const char* fmt, const std::string& name, const Prf& a, const Prf& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, name.c_str(), 100 * a.precision, 100 * a.recall, 100 * a.f1,
                100 * b.precision, 100 * b.recall, 100 * b.f1);
  return buf;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

std::string report_to_text(const MetricsReport& report) {
  const char* fmt = "%-6s %8.2f %8.2f %8.2f   %8.2f %8.2f %8.2f\n";
  char header[160];
  std::snprintf(header, sizeof header, "%-6s %8s %8s %8s   %8s %8s %8s\n", "task", "P", "R", "F1",
                "macroP", "macroR", "macroF1");
  std::string out = header;
  out += row(fmt, "NER", report.ner.micro, report.ner.macro);
  out += row(fmt, "RE", report.re.micro, report.re.macro);
  out += row(fmt, "RE+", report.re_plus.micro, report.re_plus.macro);
  const auto extra = [&](const char* name, const TaskMetrics& t) {
    if (t.predicted_only_types.empty()) return;
    out += std::string(name) + " types predicted but absent from gold:";
    for (const auto& type : t.predicted_only_types) out += " " + type;
    out += "\n";
  };
  extra("NER", report.ner);
  extra("RE", report.re);
  return out;
}

std::string entity_breakdown_to_json(const std::vector<EntityLengthBucket>& buckets) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : buckets) {
    arr.push_back({{"bucket", b.label}, {"gold_entities", b.gold_entities}, {"ner", task_json(b.ner)}});
  }
  return arr.dump(2) + "\n";
}

std::string entity_breakdown_to_text(const std::vector<EntityLengthBucket>& buckets) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %8s %8s %8s %8s\n", "length", "gold", "P", "R", "F1");
  std::string out = buf;
  for (const auto& b : buckets) {
    std::snprintf(buf, sizeof buf, "%-8s %8ld %8.2f %8.2f %8.2f\n", b.label.c_str(), b.gold_entities,
                  100 * b.ner.micro.precision, 100 * b.ner.micro.recall, 100 * b.ner.micro.f1);
    out += buf;
  }
  return out;
}

std::string sentence_breakdown_to_json(const std::vector<SentenceLengthBucket>& buckets) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : buckets) arr.push_back({{"bucket", b.label}, {"metrics", report_json(b.metrics)}});
  return arr.dump(2) + "\n";
}

std::string sentence_breakdown_to_text(const std::vector<SentenceLengthBucket>& buckets) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %9s %8s %8s %8s\n", "length", "sentences", "NER F1", "RE F1",
                "RE+ F1");
  std::string out = buf;
  for (const auto& b : buckets) {
    std::snprintf(buf, sizeof buf, "%-8s %9d %8.2f %8.2f %8.2f\n", b.label.c_str(), b.metrics.sentences,
                  100 * b.metrics.ner.micro.f1, 100 * b.metrics.re.micro.f1,
                  100 * b.metrics.re_plus.micro.f1);
    out += buf;
  }
  return out;
}

}  // namespace stsn
