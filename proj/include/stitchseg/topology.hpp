#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stitchseg/common.hpp"

namespace stitchseg {

struct Bone {
  std::size_t parent = 0;
  std::size_t child = 0;
  double ref_length = 1.0;
};

// Skeleton topology: a spanning tree over V joints rooted at the spine joint,
// with a canonical reference length per bone.
class Topology {
 public:
  Topology(std::string name, std::size_t joints, std::size_t dims, std::size_t root,
           std::vector<Bone> bones)
      : name_(std::move(name)), joints_(joints), dims_(dims), root_(root), bones_(std::move(bones)) {
    validate();
  }

  const std::string& name() const { return name_; }
  std::size_t joint_count() const { return joints_; }
  std::size_t dims() const { return dims_; }
  std::size_t root() const { return root_; }
  const std::vector<Bone>& bones() const { return bones_; }

  // Bone indices ordered so a parent joint is always placed before its
  // children; this is the forward-kinematics traversal order.
  const std::vector<std::size_t>& fk_order() const { return fk_order_; }

  std::size_t frame_width() const { return joints_ * dims_; }

 private:
  void validate() {
    if (joints_ < 1) throw Error("topology '" + name_ + "': joint count must be >= 1");
    if (dims_ != 2 && dims_ != 3)
      throw Error("topology '" + name_ + "': dims must be 2 or 3, got " + std::to_string(dims_));
    if (root_ >= joints_)
      throw Error("topology '" + name_ + "': root index " + std::to_string(root_) + " out of range");
    if (bones_.size() != joints_ - 1)
      throw Error("topology '" + name_ + "': expected " + std::to_string(joints_ - 1) + " bones, got " +
                  std::to_string(bones_.size()));

    std::vector<int> parent_of(joints_, -1);
    std::vector<std::vector<std::size_t>> children(joints_);
    for (std::size_t b = 0; b < bones_.size(); ++b) {
      const Bone& bone = bones_[b];
      if (bone.parent >= joints_ || bone.child >= joints_)
        throw Error("topology '" + name_ + "': bone joint index out of range");
      if (bone.child == root_) throw Error("topology '" + name_ + "': root cannot be a bone child");
      if (parent_of[bone.child] != -1)
        throw Error("topology '" + name_ + "': joint " + std::to_string(bone.child) +
                    " has more than one parent");
      if (!(bone.ref_length > 0.0))
        throw Error("topology '" + name_ + "': bone reference length must be > 0");
      parent_of[bone.child] = static_cast<int>(bone.parent);
      children[bone.parent].push_back(b);
    }

    // BFS from the root must reach every joint (no cycles, fully connected).
    fk_order_.clear();
    std::vector<bool> seen(joints_, false);
    std::vector<std::size_t> queue{root_};
    seen[root_] = true;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t j = queue[qi];
      for (std::size_t b : children[j]) {
        const std::size_t c = bones_[b].child;
        if (seen[c]) throw Error("topology '" + name_ + "': bones contain a cycle");
        seen[c] = true;
        fk_order_.push_back(b);
        queue.push_back(c);
      }
    }
    for (std::size_t j = 0; j < joints_; ++j)
      if (!seen[j])
        throw Error("topology '" + name_ + "': joint " + std::to_string(j) + " unreachable from root");
  }

  std::string name_;
  std::size_t joints_;
  std::size_t dims_;
  std::size_t root_;
  std::vector<Bone> bones_;
  std::vector<std::size_t> fk_order_;
};

using TopologyPtr = std::shared_ptr<const Topology>;

inline bool compatible(const Topology& a, const Topology& b) {
  return a.joint_count() == b.joint_count() && a.dims() == b.dims();
}

}  // namespace stitchseg
