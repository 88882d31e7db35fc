#pragma once

// View/scale normalization applied before any correspondence computation:
// spine-centering followed by bone-length normalization.

#include <cmath>
#include <string>

#include "stitchseg/common.hpp"
#include "stitchseg/sequence.hpp"

namespace stitchseg {

// Subtracts the root ("spine") joint trajectory from every joint. The root
// coordinate is written as exact zero.
inline SkeletonSequence spine_center(const SkeletonSequence& seq) {
  const Topology& topo = *seq.topology();
  const std::size_t dims = topo.dims();
  const std::size_t root = topo.root();
  Mat out = seq.data();
  for (std::size_t t = 0; t < out.rows; ++t) {
    double anchor[3] = {0, 0, 0};
    for (std::size_t c = 0; c < dims; ++c) anchor[c] = out(t, root * dims + c);
    for (std::size_t v = 0; v < topo.joint_count(); ++v)
      for (std::size_t c = 0; c < dims; ++c)
        out(t, v * dims + c) = (v == root) ? 0.0 : out(t, v * dims + c) - anchor[c];
  }
  return SkeletonSequence(seq.topology(), std::move(out));
}

// Forward-kinematics rescaling: walk the bone tree from the root and replace
// each bone vector by its unit direction times the reference length. Bone
// directions are preserved; lengths end up exactly at their references.
inline SkeletonSequence normalize_bones(const SkeletonSequence& seq) {
  const Topology& topo = *seq.topology();
  const std::size_t dims = topo.dims();
  const Mat& in = seq.data();
  Mat out = in;  // root (and any anchor position) carried over unchanged
  for (std::size_t t = 0; t < in.rows; ++t) {
    for (std::size_t bi : topo.fk_order()) {
      const Bone& bone = topo.bones()[bi];
      double vec[3] = {0, 0, 0};
      double sq = 0.0;
      for (std::size_t c = 0; c < dims; ++c) {
        vec[c] = in(t, bone.child * dims + c) - in(t, bone.parent * dims + c);
        sq += vec[c] * vec[c];
      }
      const double len = std::sqrt(sq);
      if (len < 1e-12)
        throw DegenerateBone("bone (" + std::to_string(bone.parent) + " -> " +
                             std::to_string(bone.child) + ") has zero length in frame " +
                             std::to_string(t));
      const double scale = bone.ref_length / len;
      for (std::size_t c = 0; c < dims; ++c)
        out(t, bone.child * dims + c) = out(t, bone.parent * dims + c) + vec[c] * scale;
    }
  }
  return SkeletonSequence(seq.topology(), std::move(out));
}

inline SkeletonSequence preprocess(const SkeletonSequence& seq) {
  return normalize_bones(spine_center(seq));
}

// True when the root trajectory is identically zero (spine-centered data).
inline bool is_centered(const SkeletonSequence& seq, double tol = 1e-9) {
  const Topology& topo = *seq.topology();
  for (std::size_t t = 0; t < seq.length(); ++t)
    for (std::size_t c = 0; c < topo.dims(); ++c)
      if (std::abs(seq.at(t, topo.root(), c)) > tol) return false;
  return true;
}

}  // namespace stitchseg
