#pragma once

// Frame-correspondence distance and the registration search over a batch.
// register_correspondence is the production search (with early abandoning);
// register_oracle is the plain exhaustive double loop. Both must return the
// same (clip, frame) with lexicographic tie-breaking.

#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stitchseg/common.hpp"
#include "stitchseg/sequence.hpp"

namespace stitchseg {

struct CorrespondenceConfig {
  double d_star = std::numeric_limits<double>::infinity();  // validity threshold
  double beta = 4.0;                                        // search-range divisor

  void validate() const {
    if (!(d_star >= 0.0)) throw Error("correspondence: d_star must be >= 0");
    if (!(beta >= 1.0)) throw Error("correspondence: beta must be >= 1");
  }
};

struct Match {
  std::size_t clip_index = 0;
  std::size_t frame_index = 0;
  double distance = std::numeric_limits<double>::infinity();
};

struct NoValidCorrespondence : Error {
  NoValidCorrespondence(Match best_, double d_star)
      : Error("no valid correspondence: best distance " + fmt_g9(best_.distance) +
              " at clip " + std::to_string(best_.clip_index) + " frame " +
              std::to_string(best_.frame_index) + " exceeds d* = " + fmt_g9(d_star)),
        best(best_) {}
  Match best;
};

// Per-joint sum of squared positional difference plus a hinge on orientation,
// max(1 - cos(p_v, q_v), 0). Joints shorter than 1e-12 (always the root after
// centering) contribute no orientation term.
inline double frame_distance(std::span<const double> p, std::span<const double> q,
                             std::size_t joints, std::size_t dims) {
  if (p.size() != joints * dims || q.size() != joints * dims)
    throw TopologyMismatch("frame_distance: frames do not match topology shape");
  double acc = 0.0;
  for (std::size_t v = 0; v < joints; ++v) {
    const auto pv = p.subspan(v * dims, dims);
    const auto qv = q.subspan(v * dims, dims);
    double sq = 0.0;
    for (std::size_t c = 0; c < dims; ++c) {
      const double d = pv[c] - qv[c];
      sq += d * d;
    }
    acc += sq;
    const double np = norm2(pv), nq = norm2(qv);
    if (np >= 1e-12 && nq >= 1e-12) {
      const double cosv = std::clamp(dot(pv, qv) / (np * nq), -1.0, 1.0);
      acc += std::max(1.0 - cosv, 0.0);
    }
  }
  return acc;
}

inline double frame_distance(const SkeletonSequence& a, std::size_t ta,
                             const SkeletonSequence& b, std::size_t tb) {
  if (!compatible(*a.topology(), *b.topology()))
    throw TopologyMismatch("frame_distance: sequences use incompatible topologies");
  return frame_distance(a.frame(ta), b.frame(tb), a.topology()->joint_count(),
                        a.topology()->dims());
}

namespace detail {

// Same accumulation order as frame_distance, but abandons once the partial
// sum can no longer beat `bound` (all terms are nonnegative). Returns +inf on
// abandonment; otherwise the value is bit-identical to frame_distance.
inline double frame_distance_bounded(std::span<const double> p, std::span<const double> q,
                                     std::size_t joints, std::size_t dims, double bound) {
  double acc = 0.0;
  for (std::size_t v = 0; v < joints; ++v) {
    const auto pv = p.subspan(v * dims, dims);
    const auto qv = q.subspan(v * dims, dims);
    double sq = 0.0;
    for (std::size_t c = 0; c < dims; ++c) {
      const double d = pv[c] - qv[c];
      sq += d * d;
    }
    acc += sq;
    const double np = norm2(pv), nq = norm2(qv);
    if (np >= 1e-12 && nq >= 1e-12) {
      const double cosv = std::clamp(dot(pv, qv) / (np * nq), -1.0, 1.0);
      acc += std::max(1.0 - cosv, 0.0);
    }
    if (acc >= bound) return std::numeric_limits<double>::infinity();
  }
  return acc;
}

inline std::vector<std::size_t> candidate_clips(const Batch& batch, int k,
                                                const std::set<std::size_t>& exclude) {
  std::vector<std::size_t> out;
  for (std::size_t i : batch.subset(k))
    if (!exclude.count(i)) out.push_back(i);
  return out;
}

}  // namespace detail

// T* = max(1, floor(clip_length / beta)): number of leading frames searched
// in each candidate clip. Clamped so short clips stay usable.
inline std::size_t search_range(std::size_t clip_length, double beta) {
  if (clip_length < 1) throw Error("search_range: clip_length must be >= 1");
  if (!(beta >= 1.0)) throw Error("search_range: beta must be >= 1");
  const auto t = static_cast<std::size_t>(std::floor(double(clip_length) / beta));
  return std::max<std::size_t>(1, t);
}

// Exhaustive reference search: minimizes frame_distance over candidate clips
// of class k and their first T* frames, ties broken by (clip, frame).
inline Match register_oracle(std::span<const double> tmpl, const Batch& batch, int k,
                             const CorrespondenceConfig& cfg,
                             const std::set<std::size_t>& exclude = {}) {
  cfg.validate();
  const auto cands = detail::candidate_clips(batch, k, exclude);
  if (cands.empty())
    throw EmptyCandidateSet("no candidate clips of class " + std::to_string(k));
  const Topology& topo = *batch[cands[0]].sequence.topology();
  Match best;
  for (std::size_t i : cands) {
    const SkeletonSequence& clip = batch[i].sequence;
    const std::size_t t_star = search_range(clip.length(), cfg.beta);
    for (std::size_t t = 0; t < t_star; ++t) {
      const double d = frame_distance(tmpl, clip.frame(t), topo.joint_count(), topo.dims());
      if (d < best.distance) best = Match{i, t, d};
    }
  }
  if (best.distance > cfg.d_star) throw NoValidCorrespondence(best, cfg.d_star);
  return best;
}

// Production search; must agree with register_oracle exactly.
inline Match register_correspondence(std::span<const double> tmpl, const Batch& batch, int k,
                                     const CorrespondenceConfig& cfg,
                                     const std::set<std::size_t>& exclude = {}) {
  cfg.validate();
  const auto cands = detail::candidate_clips(batch, k, exclude);
  if (cands.empty())
    throw EmptyCandidateSet("no candidate clips of class " + std::to_string(k));
  const Topology& topo = *batch[cands[0]].sequence.topology();
  Match best;
  for (std::size_t i : cands) {
    const SkeletonSequence& clip = batch[i].sequence;
    const std::size_t t_star = search_range(clip.length(), cfg.beta);
    for (std::size_t t = 0; t < t_star; ++t) {
      const double d = detail::frame_distance_bounded(tmpl, clip.frame(t), topo.joint_count(),
                                                      topo.dims(), best.distance);
      if (d < best.distance) best = Match{i, t, d};
    }
  }
  if (best.distance > cfg.d_star) throw NoValidCorrespondence(best, cfg.d_star);
  return best;
}

}  // namespace stitchseg
