// SPDX-License-Identifier: Apache-2.0
#include "dsvd/analysis.hpp"

#include <algorithm>
#include <fstream>

#include "dsvd/archive.hpp"
#include "dsvd/error.hpp"
#include "dsvd/linalg.hpp"

namespace dsvd {

using nlohmann::json;
using nlohmann::ordered_json;

SimilarityReport layer_similarity_report(const Checkpoint& pre, const Checkpoint& ft) {
  SimilarityReport report;
  std::size_t unchanged = 0;
  for (const auto& [name, a] : pre.tensors) {
    const TensorRecord* b = ft.find(name);
    if (b == nullptr || b->shape != a.shape || a.numel() == 0) continue;
    const auto [rows, cols] = matrix_dims(a.shape);
    const double cos = cosine_similarity(Matrix(rows, cols, a.to_doubles()), Matrix(rows, cols, b->to_doubles()));
    report.entries.push_back({name, cos});
    if (cos > kUnchangedCosine) ++unchanged;
  }
  if (report.entries.empty())
    raise(ErrorCode::NoSharedLayers, "checkpoints share no layer with a matching shape");
  report.unchanged_fraction = static_cast<double>(unchanged) / static_cast<double>(report.entries.size());
  return report;
}

ordered_json to_json(const SimilarityReport& report) {
  ordered_json entries = ordered_json::array();
  for (const auto& e : report.entries) entries.push_back({{"layer", e.layer}, {"cosine", e.cosine}});
  return {{"shared_layers", report.entries.size()},
          {"unchanged_threshold", kUnchangedCosine},
          {"unchanged_fraction", report.unchanged_fraction},
          {"entries", std::move(entries)}};
}

LayerGroupSpec LayerGroupSpec::unet_default() {
  return {{{"conv_in", {"conv_in"}},
           {"conv_out", {"conv_out"}},
           {"down_blocks", {"down_blocks"}},
           {"mid_block", {"mid_block"}},
           {"up_blocks", {"up_blocks"}}}};
}

LayerGroupSpec LayerGroupSpec::from_json(const json& doc) {
  LayerGroupSpec spec;
  try {
    for (const auto& g : doc.at("groups")) {
      LayerGroup group{g.at("name").get<std::string>(), g.at("prefixes").get<std::vector<std::string>>()};
      if (group.name.empty()) raise(ErrorCode::InvalidArgument, "group with an empty name");
      spec.groups.push_back(std::move(group));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidArgument, std::string("invalid group spec: ") + e.what());
  }
  return spec;
}

LayerGroupSpec LayerGroupSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open group spec '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidArgument, std::string("group spec is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

std::string LayerGroupSpec::group_of(const std::string& layer) const {
  for (const auto& g : groups)
    for (const auto& prefix : g.prefixes)
      if (layer.starts_with(prefix)) return g.name;
  return std::string(kOtherGroup);
}

std::vector<GroupRank> rank_table(const DeltaArchive& archive, const LayerGroupSpec& spec) {
  std::vector<std::string> order;
  for (const auto& g : spec.groups)
    if (std::find(order.begin(), order.end(), g.name) == order.end()) order.push_back(g.name);
  if (std::find(order.begin(), order.end(), kOtherGroup) == order.end()) order.emplace_back(kOtherGroup);

  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& [name, layer] : archive.layers) {
    auto& [total, count] = sums[spec.group_of(name)];
    total += static_cast<double>(layer.rank());
    ++count;
  }

  std::vector<GroupRank> table;
  for (const auto& group : order) {
    const auto it = sums.find(group);
    if (it == sums.end()) continue;
    table.push_back({group, it->second.first / static_cast<double>(it->second.second), it->second.second});
  }
  return table;
}

ordered_json to_json(const std::vector<GroupRank>& table) {
  ordered_json out = ordered_json::object();
  for (const auto& row : table) out[row.group] = {{"average_rank", row.average_rank}, {"layers", row.layers}};
  return out;
}

CompressionReport compression_report(const DeltaArchive& archive) {
  CompressionReport report;
  report.tau = archive.tau;
  std::uint64_t payload_bytes = 0;
  for (const auto& [name, layer] : archive.layers) {
    LayerAccounting row{name, std::string(to_string(layer.kind())), layer.rank(), layer.original_shape,
                        layer.dense_params(), layer.stored_params()};
    report.dense_param_count += row.dense_params;
    report.stored_param_count += row.stored_params;
    payload_bytes += row.stored_params * element_size(layer.original_dtype);
    report.layers.push_back(std::move(row));
  }
  if (report.stored_param_count > 0)
    report.ratio = static_cast<double>(report.dense_param_count) / static_cast<double>(report.stored_param_count);
  report.estimated_bytes = payload_bytes + manifest_json(archive).size();
  return report;
}

ordered_json to_json(const CompressionReport& report) {
  ordered_json layers = ordered_json::array();
  for (const auto& l : report.layers)
    layers.push_back({{"layer", l.layer},
                      {"kind", l.kind},
                      {"rank", l.rank},
                      {"shape", l.shape},
                      {"dense_params", l.dense_params},
                      {"stored_params", l.stored_params}});
  ordered_json out = {{"tau", report.tau},
                      {"dense_param_count", report.dense_param_count},
                      {"stored_param_count", report.stored_param_count}};
  if (report.ratio)
    out["ratio"] = *report.ratio;
  else
    out["ratio"] = "infinite";
  out["estimated_bytes"] = report.estimated_bytes;
  out["layers"] = std::move(layers);
  return out;
}

}  // namespace dsvd
