#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stitchseg/common.hpp"
#include "stitchseg/topology.hpp"

namespace stitchseg {

// T x V x C joint coordinates, stored as a T x (V*C) matrix in joint-major
// order (j0x j0y j0z j1x ...). Immutable after construction.
class SkeletonSequence {
 public:
  SkeletonSequence(TopologyPtr topology, Mat frames)
      : topology_(std::move(topology)), frames_(std::move(frames)) {
    if (!topology_) throw Error("sequence: null topology");
    if (frames_.rows < 1) throw Error("sequence: length must be >= 1");
    if (frames_.cols != topology_->frame_width())
      throw TopologyMismatch("sequence: frame width " + std::to_string(frames_.cols) +
                             " does not match topology '" + topology_->name() + "' (" +
                             std::to_string(topology_->frame_width()) + ")");
    if (!all_finite(frames_)) throw Error("sequence: non-finite coordinate");
  }

  const TopologyPtr& topology() const { return topology_; }
  std::size_t length() const { return frames_.rows; }
  const Mat& data() const { return frames_; }

  std::span<const double> frame(std::size_t t) const { return frames_.row(t); }

  std::span<const double> joint(std::size_t t, std::size_t v) const {
    const std::size_t c = topology_->dims();
    return frames_.row(t).subspan(v * c, c);
  }

  double at(std::size_t t, std::size_t v, std::size_t c) const {
    return frames_(t, v * topology_->dims() + c);
  }

 private:
  TopologyPtr topology_;
  Mat frames_;
};

struct TrimmedClip {
  TrimmedClip(SkeletonSequence seq, int label_) : sequence(std::move(seq)), label(label_) {
    if (label < 0) throw LabelOutOfRange("clip label must be >= 0, got " + std::to_string(label));
  }
  SkeletonSequence sequence;
  int label;
};

// Half-open frame interval [start, end) carrying one class id.
struct LabeledSegment {
  std::size_t start = 0;
  std::size_t end = 0;
  int label = 0;
};

inline void validate_tiling(const std::vector<LabeledSegment>& segments, std::size_t total_frames) {
  if (segments.empty()) throw TilingViolation("segment list is empty");
  if (segments.front().start != 0)
    throw TilingViolation("first segment starts at " + std::to_string(segments.front().start) +
                          ", expected 0");
  for (std::size_t n = 0; n < segments.size(); ++n) {
    const LabeledSegment& s = segments[n];
    if (s.start >= s.end)
      throw TilingViolation("segment " + std::to_string(n) + " is empty or reversed");
    if (s.label < 0) throw LabelOutOfRange("segment label must be >= 0");
    if (n > 0) {
      if (s.start != segments[n - 1].end)
        throw TilingViolation("segment " + std::to_string(n) + " starts at " +
                              std::to_string(s.start) + ", expected " +
                              std::to_string(segments[n - 1].end));
      if (s.label == segments[n - 1].label)
        throw AdjacentDuplicateLabels("segments " + std::to_string(n - 1) + " and " +
                                      std::to_string(n) + " share label " + std::to_string(s.label));
    }
  }
  if (segments.back().end != total_frames)
    throw TilingViolation("last segment ends at " + std::to_string(segments.back().end) +
                          ", expected " + std::to_string(total_frames));
}

class UntrimmedSequence {
 public:
  UntrimmedSequence(SkeletonSequence seq, std::vector<LabeledSegment> segments)
      : sequence_(std::move(seq)), segments_(std::move(segments)) {
    validate_tiling(segments_, sequence_.length());
  }

  const SkeletonSequence& sequence() const { return sequence_; }
  const std::vector<LabeledSegment>& segments() const { return segments_; }
  std::size_t length() const { return sequence_.length(); }

  std::vector<int> frame_labels() const {
    std::vector<int> out(sequence_.length());
    for (const LabeledSegment& s : segments_)
      for (std::size_t t = s.start; t < s.end; ++t) out[t] = s.label;
    return out;
  }

 private:
  SkeletonSequence sequence_;
  std::vector<LabeledSegment> segments_;
};

// Ordered action labels; adjacent entries must differ so segment boundaries
// stay recoverable from frame labels.
class Permutation {
 public:
  explicit Permutation(std::vector<int> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw Error("permutation must contain at least one label");
    for (std::size_t n = 0; n < labels_.size(); ++n) {
      if (labels_[n] < 0) throw LabelOutOfRange("permutation label must be >= 0");
      if (n > 0 && labels_[n] == labels_[n - 1])
        throw AdjacentDuplicateLabels("permutation has equal adjacent labels at position " +
                                      std::to_string(n));
    }
  }

  const std::vector<int>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  int operator[](std::size_t n) const { return labels_[n]; }

  bool operator==(const Permutation& o) const { return labels_ == o.labels_; }
  bool operator<(const Permutation& o) const { return labels_ < o.labels_; }

  std::string to_string() const {
    std::string s;
    for (std::size_t n = 0; n < labels_.size(); ++n) {
      if (n) s += ',';
      s += std::to_string(labels_[n]);
    }
    return s;
  }

 private:
  std::vector<int> labels_;
};

// Indexed collection of labeled trimmed clips sharing one topology.
class Batch {
 public:
  Batch() = default;

  explicit Batch(std::vector<TrimmedClip> clips) : clips_(std::move(clips)) {
    for (std::size_t i = 0; i < clips_.size(); ++i) {
      if (i > 0 && !compatible(*clips_[i].sequence.topology(), *clips_[0].sequence.topology()))
        throw TopologyMismatch("batch clips use incompatible topologies");
      subsets_[clips_[i].label].push_back(i);
    }
  }

  const std::vector<TrimmedClip>& clips() const { return clips_; }
  std::size_t size() const { return clips_.size(); }
  const TrimmedClip& operator[](std::size_t i) const { return clips_[i]; }

  // Indices of clips labeled k, ascending. Empty when the class is absent.
  std::vector<std::size_t> subset(int k) const {
    auto it = subsets_.find(k);
    return it == subsets_.end() ? std::vector<std::size_t>{} : it->second;
  }

  std::vector<int> classes() const {
    std::vector<int> out;
    for (const auto& [k, v] : subsets_) out.push_back(k);
    return out;
  }

 private:
  std::vector<TrimmedClip> clips_;
  std::map<int, std::vector<std::size_t>> subsets_;
};

inline std::vector<std::size_t> class_subset(const Batch& batch, int k) { return batch.subset(k); }

}  // namespace stitchseg
