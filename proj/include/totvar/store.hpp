#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "totvar/adjust.hpp"
#include "totvar/moments.hpp"

namespace totvar {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Json to_json(const Matrix& m);  ///< nested rows
Json to_json(const PosteriorApprox& approx);
Json to_json(const ReplicateBundle& bundle);
Json to_json(const MomentSummary& summary);
Json to_json(const AdjustmentMap& map);

Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);
PosteriorApprox approx_from_json(const Json& j);
ReplicateBundle bundle_from_json(const Json& j);
MomentSummary moments_from_json(const Json& j);
AdjustmentMap adjustment_from_json(const Json& j);

/// JSON Lines replicate store. Reading validates every line and reports the
/// 1-based line number of the first violation; duplicate indices are errors.
std::vector<ReplicateBundle> read_store(std::istream& in);
std::vector<ReplicateBundle> read_store(const std::filesystem::path& path);
void write_store(std::ostream& out, const std::vector<ReplicateBundle>& bundles);
void write_store(const std::filesystem::path& path, const std::vector<ReplicateBundle>& bundles);
void append_store(const std::filesystem::path& path, const std::vector<ReplicateBundle>& bundles);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

} // namespace totvar
