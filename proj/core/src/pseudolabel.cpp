#include "scim/pseudolabel.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/tensorio.hpp"

namespace scim {

namespace fs = std::filesystem;
using nlohmann::json;

void PseudoLabelConfig::validate() const {
  if (!(merge_iou > 0.0 && merge_iou <= 1.0)) throw ValidationError("pseudolabel: merge_iou must lie in (0,1]");
}

double default_delta(const VoxelMap& map, double percentile) {
  std::vector<double> certs;
  certs.reserve(map.size());
  for (const auto& cell : map.cells()) certs.push_back(cell.mean_cert());
  return nearest_rank_percentile(std::move(certs), percentile);
}

MergeResult merge_clusters(const ClusterSolution& solution, std::span<const RenderedVertex> render,
                           std::vector<std::string> known_classes, const PseudoLabelConfig& config) {
  config.validate();
  if (render.size() != solution.size()) throw ValidationError("merge_clusters: render/solution length mismatch");
  const std::size_t k = solution.n_clusters;
  const std::size_t classes = known_classes.size();
  MergeResult out{std::vector<std::int32_t>(k, kNoise), ClassCatalog(std::move(known_classes)), {}};

  std::vector<std::vector<std::size_t>> inter(k, std::vector<std::size_t>(classes, 0));
  std::vector<std::size_t> cluster_size(k, 0), class_size(classes, 0);
  for (std::size_t i = 0; i < render.size(); ++i) {
    const auto c = render[i].fused_class;
    const bool has_class = c >= 0 && static_cast<std::size_t>(c) < classes;
    if (has_class) ++class_size[static_cast<std::size_t>(c)];
    const auto cl = solution.assignment[i];
    if (cl < 0) continue;
    ++cluster_size[static_cast<std::size_t>(cl)];
    if (has_class) ++inter[static_cast<std::size_t>(cl)][static_cast<std::size_t>(c)];
  }

  struct Candidate {
    double iou;
    std::size_t cluster;
    std::size_t cls;
  };
  std::vector<Candidate> candidates;
  out.bindings.resize(k);
  for (std::size_t cl = 0; cl < k; ++cl) {
    out.bindings[cl].cluster = static_cast<std::int32_t>(cl);
    out.bindings[cl].size = cluster_size[cl];
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t uni = cluster_size[cl] + class_size[c] - inter[cl][c];
      if (uni == 0) continue;
      const double iou = static_cast<double>(inter[cl][c]) / static_cast<double>(uni);
      out.bindings[cl].iou = std::max(out.bindings[cl].iou, iou);
      if (iou > config.merge_iou) candidates.push_back({iou, cl, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.cluster != b.cluster) return a.cluster < b.cluster;
    return a.cls < b.cls;
  });
  std::vector<bool> class_taken(classes, false);
  for (const auto& cand : candidates) {
    if (class_taken[cand.cls] || out.class_of_cluster[cand.cluster] != kNoise) continue;
    class_taken[cand.cls] = true;
    out.class_of_cluster[cand.cluster] = static_cast<std::int32_t>(cand.cls);
    out.bindings[cand.cluster].class_id = static_cast<std::int32_t>(cand.cls);
    out.bindings[cand.cluster].iou = cand.iou;
  }

  std::vector<std::size_t> unbound;
  for (std::size_t cl = 0; cl < k; ++cl) {
    if (out.class_of_cluster[cl] == kNoise) unbound.push_back(cl);
  }
  std::stable_sort(unbound.begin(), unbound.end(),
                   [&](std::size_t a, std::size_t b) { return cluster_size[a] > cluster_size[b]; });
  for (auto cl : unbound) {
    const auto id = out.catalog.add_novel(static_cast<std::int32_t>(config.ignore_id));
    if (id > 65535) throw ValidationError("pseudolabel: novel class ids exceed the u16 label range");
    out.class_of_cluster[cl] = id;
    out.bindings[cl].class_id = id;
    out.bindings[cl].novel = true;
  }
  return out;
}

std::vector<PseudoLabelFrame> make_pseudolabels(const SceneBundle& bundle, std::span<const RenderedVertex> render,
                                                const ClusterSolution& solution, const MergeResult& merged,
                                                const PseudoLabelConfig& config) {
  if (render.size() != bundle.vertices.size() || solution.size() != bundle.vertices.size()) {
    throw ValidationError("make_pseudolabels: inputs do not cover the bundle");
  }
  std::vector<PseudoLabelFrame> frames(bundle.frame_count());
  for (std::size_t f = 0; f < bundle.frame_count(); ++f) {
    auto& frame = frames[f];
    for (std::size_t i = bundle.frame_offsets[f]; i < bundle.frame_offsets[f + 1]; ++i) {
      const auto& r = render[i];
      if (r.fused_class != kUnknownClass && r.mean_cert >= config.delta) {
        frame.labels.push_back(static_cast<std::uint16_t>(r.fused_class));
        frame.provenance.push_back(Provenance::map);
      } else if (solution.assignment[i] != kNoise) {
        frame.labels.push_back(static_cast<std::uint16_t>(merged.class_for(solution.assignment[i])));
        frame.provenance.push_back(Provenance::cluster);
      } else {
        frame.labels.push_back(config.ignore_id);
        frame.provenance.push_back(Provenance::ignored);
      }
    }
  }
  return frames;
}

json labels_to_json(const MergeResult& merged, const PseudoLabelConfig& config) {
  json known = json::array();
  for (std::size_t c = 0; c < merged.catalog.known_count(); ++c) {
    known.push_back({{"id", c}, {"name", merged.catalog.known_names()[c]}});
  }
  json novel = json::array();
  json clusters = json::array();
  for (const auto& b : merged.bindings) {
    clusters.push_back({{"cluster", b.cluster}, {"class_id", b.class_id}, {"novel", b.novel},
                        {"size", b.size}, {"iou", b.iou}});
    if (b.novel) novel.push_back({{"id", b.class_id}, {"name", merged.catalog.name(b.class_id)}, {"cluster", b.cluster}});
  }
  std::sort(novel.begin(), novel.end(), [](const json& a, const json& b) { return a["id"] < b["id"]; });
  return {{"known", known}, {"novel", novel}, {"clusters", clusters},
          {"ignore_id", config.ignore_id}, {"delta", config.delta}, {"merge_iou", config.merge_iou}};
}

void save_pseudolabels(const SceneBundle& bundle, std::span<const PseudoLabelFrame> frames,
                       const MergeResult& merged, const PseudoLabelConfig& config, const fs::path& dir) {
  std::error_code ec;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const fs::path fdir = dir / "frames" / bundle.manifest.frames[f];
    fs::create_directories(fdir, ec);
    if (ec) throw IoError("cannot create " + fdir.string() + ": " + ec.message());
    const std::uint64_t n = frames[f].labels.size();
    write_tensor(fdir / "pseudo.tns", Tensor::from({n}, frames[f].labels));
    std::vector<std::uint8_t> prov(frames[f].provenance.size());
    std::transform(frames[f].provenance.begin(), frames[f].provenance.end(), prov.begin(),
                   [](Provenance p) { return static_cast<std::uint8_t>(p); });
    write_tensor(fdir / "provenance.tns", Tensor::from({n}, std::move(prov)));
  }
  write_json(dir / "labels.json", labels_to_json(merged, config));
}

std::vector<std::int32_t> load_pseudolabel_predictions(const SceneBundle& bundle, const fs::path& dir,
                                                       std::uint16_t* ignore_id_out) {
  std::uint16_t ignore_id = 255;
  if (fs::exists(dir / "labels.json")) ignore_id = read_json(dir / "labels.json").value("ignore_id", std::uint16_t{255});
  if (ignore_id_out) *ignore_id_out = ignore_id;
  std::vector<std::int32_t> out;
  out.reserve(bundle.vertices.size());
  for (std::size_t f = 0; f < bundle.frame_count(); ++f) {
    const fs::path p = dir / "frames" / bundle.manifest.frames[f] / "pseudo.tns";
    if (!fs::exists(p)) throw IoError("missing file: " + p.string());
    const auto t = read_tensor(p);
    const std::size_t n = bundle.frame_offsets[f + 1] - bundle.frame_offsets[f];
    if (!t.holds<std::uint16_t>() || t.ndim() != 1 || t.dims()[0] != n) {
      throw ValidationError(p.string() + ": expected " + std::to_string(n) + " u16 labels");
    }
    for (auto v : t.values<std::uint16_t>()) out.push_back(v == ignore_id ? kNoise : static_cast<std::int32_t>(v));
  }
  return out;
}

}  // namespace scim
