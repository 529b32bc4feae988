#pragma once

#include <string>
#include <vector>

#include "stsn/eval/metrics.hpp"

namespace stsn {

std::string report_to_json(const MetricsReport& report);
/// Aligned table: one row per task with micro and macro P/R/F1.
std::string report_to_text(const MetricsReport& report);

std::string entity_breakdown_to_json(const std::vector<EntityLengthBucket>& buckets);
std::string entity_breakdown_to_text(const std::vector<EntityLengthBucket>& buckets);
std::string sentence_breakdown_to_json(const std::vector<SentenceLengthBucket>& buckets);
std::string sentence_breakdown_to_text(const std::vector<SentenceLengthBucket>& buckets);

}  // namespace stsn
