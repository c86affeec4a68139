#pragma once

#include <string>

#include "json.hpp"
#include "relate/lrt.hpp"
#include "relate/mlsearch.hpp"
#include "relate/permtest.hpp"
#include "relate/treecmp.hpp"

namespace relate::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFitSchema = "relate.fit/1";
inline constexpr const char* kLrtSchema = "relate.lrt/1";
inline constexpr const char* kPermSchema = "relate.permtest/1";
inline constexpr const char* kGqdSchema = "relate.gqd/1";
inline constexpr const char* kManifestSchema = "relate.manifest/1";

Json model_to_json(const SubstitutionModel& model);
// Throws SchemaError for missing or malformed fields.
SubstitutionModel model_from_json(const Json& j);

Json fit_to_json(const MlFit& fit);
MlFit fit_from_json(const Json& j);

Json search_to_json(const SearchConfig& cfg);
Json lrt_to_json(const LrtReport& report);
Json merge_tree_to_json(const MergeTree& tree, WordMetric::Kind metric, int n_perm, std::uint64_t seed);
Json quartet_to_json(const QuartetScore& score);

}  // namespace relate::cli
