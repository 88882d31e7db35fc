#pragma once

// Text file formats. All writers emit reals with 9 significant digits and are
// byte-deterministic; readers report malformed input with file:line.
//
//   SKT — topology          SKQ — trimmed clip or untrimmed sequence
//   LBL — label space       PRD — per-frame class probabilities

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stitchseg/common.hpp"
#include "stitchseg/sequence.hpp"
#include "stitchseg/topology.hpp"

namespace stitchseg::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// File-access audit. When enabled, every file opened for reading is recorded;
// the zero-shot driver uses this to prove no target-domain data was touched.

namespace audit {

struct State {
  std::mutex mu;
  bool enabled = false;
  std::vector<std::string> reads;
};

inline State& state() {
  static State s;
  return s;
}

inline void enable(bool on) {
  State& s = state();
  std::lock_guard lock(s.mu);
  s.enabled = on;
  if (on) s.reads.clear();
}

inline void record_read(const std::string& path) {
  State& s = state();
  std::lock_guard lock(s.mu);
  if (s.enabled) s.reads.push_back(path);
}

inline std::vector<std::string> reads() {
  State& s = state();
  std::lock_guard lock(s.mu);
  return s.reads;
}

}  // namespace audit

// ---------------------------------------------------------------------------
// Low-level line reader with position tracking

class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno_;
    return true;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, expected " + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, lineno_, msg); }

  std::size_t lineno() const { return lineno_; }
  const std::string& path() const { return path_; }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t lineno_ = 0;
};

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

// Keyword-prefixed header line: "frames 42" -> "42"
inline std::string expect_kv(LineReader& r, const std::string& key) {
  const std::string line = r.require("'" + key + " <value>'");
  const auto toks = split_ws(line);
  if (toks.size() != 2 || toks[0] != key)
    r.fail("expected '" + key + " <value>', got '" + line + "'");
  return toks[1];
}

inline long long parse_int(LineReader& r, const std::string& tok, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    r.fail("cannot parse " + what + " from '" + tok + "'");
  }
}

inline double parse_real(LineReader& r, const std::string& tok, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    r.fail("cannot parse " + what + " from '" + tok + "'");
  }
}

inline std::ifstream open_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  audit::record_read(path);
  return in;
}

inline std::ofstream open_write(const std::string& path) {
  if (const fs::path dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

// ---------------------------------------------------------------------------
// SKT topology files

inline void write_topology(const Topology& topo, const std::string& path) {
  std::ofstream out = open_write(path);
  out << "SKT 1\n";
  out << "name " << topo.name() << "\n";
  out << "joints " << topo.joint_count() << "\n";
  out << "dims " << topo.dims() << "\n";
  out << "root " << topo.root() << "\n";
  out << "bones " << topo.bones().size() << "\n";
  for (const Bone& b : topo.bones())
    out << b.parent << " " << b.child << " " << fmt_g9(b.ref_length) << "\n";
}

inline TopologyPtr read_topology(const std::string& path) {
  std::ifstream in = open_read(path);
  LineReader r(in, path);
  if (r.require("'SKT 1' header") != "SKT 1") r.fail("bad magic, expected 'SKT 1'");
  const std::string name = expect_kv(r, "name");
  const auto joints = static_cast<std::size_t>(parse_int(r, expect_kv(r, "joints"), "joint count"));
  const auto dims = static_cast<std::size_t>(parse_int(r, expect_kv(r, "dims"), "dims"));
  const auto root = static_cast<std::size_t>(parse_int(r, expect_kv(r, "root"), "root"));
  const auto nbones = static_cast<std::size_t>(parse_int(r, expect_kv(r, "bones"), "bone count"));
  std::vector<Bone> bones;
  bones.reserve(nbones);
  for (std::size_t i = 0; i < nbones; ++i) {
    const auto toks = split_ws(r.require("bone record"));
    if (toks.size() != 3) r.fail("expected '<parent> <child> <ref_length>'");
    Bone b;
    b.parent = static_cast<std::size_t>(parse_int(r, toks[0], "bone parent"));
    b.child = static_cast<std::size_t>(parse_int(r, toks[1], "bone child"));
    b.ref_length = parse_real(r, toks[2], "bone reference length");
    bones.push_back(b);
  }
  try {
    return std::make_shared<Topology>(name, joints, dims, root, std::move(bones));
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

using TopologyRegistry = std::map<std::string, TopologyPtr>;

inline TopologyRegistry registry_of(TopologyPtr topo) {
  TopologyRegistry reg;
  reg[topo->name()] = std::move(topo);
  return reg;
}

// ---------------------------------------------------------------------------
// SKQ sequence files

struct SkqFile {
  SkeletonSequence sequence;
  std::optional<int> label;                           // trimmed form
  std::optional<std::vector<LabeledSegment>> segments;  // untrimmed form
};

namespace detail {

inline void write_frames(std::ofstream& out, const SkeletonSequence& seq) {
  const Mat& m = seq.data();
  for (std::size_t t = 0; t < m.rows; ++t) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ' ';
      out << fmt_g9(m(t, c));
    }
    out << '\n';
  }
}

inline Mat read_frames(LineReader& r, std::size_t frames, std::size_t width) {
  Mat m(frames, width);
  for (std::size_t t = 0; t < frames; ++t) {
    std::string line;
    if (!r.next(line))
      r.fail("frame count mismatch: header promised " + std::to_string(frames) +
             " frames, file ends after " + std::to_string(t));
    const auto toks = split_ws(line);
    if (toks.size() != width)
      r.fail("frame " + std::to_string(t) + " has " + std::to_string(toks.size()) +
             " coordinates, expected " + std::to_string(width));
    for (std::size_t c = 0; c < width; ++c)
      m(t, c) = parse_real(r, toks[c], "coordinate " + std::to_string(c));
  }
  std::string extra;
  if (r.next(extra) && !split_ws(extra).empty()) r.fail("trailing data after last frame");
  return m;
}

}  // namespace detail

inline void write_clip(const TrimmedClip& clip, const std::string& path) {
  std::ofstream out = open_write(path);
  out << "SKQ 1\n";
  out << "topology " << clip.sequence.topology()->name() << "\n";
  out << "frames " << clip.sequence.length() << "\n";
  out << "label " << clip.label << "\n";
  detail::write_frames(out, clip.sequence);
}

inline void write_untrimmed(const UntrimmedSequence& seq, const std::string& path) {
  std::ofstream out = open_write(path);
  out << "SKQ 1\n";
  out << "topology " << seq.sequence().topology()->name() << "\n";
  out << "frames " << seq.length() << "\n";
  out << "segments " << seq.segments().size() << "\n";
  for (const LabeledSegment& s : seq.segments())
    out << s.start << " " << s.end << " " << s.label << "\n";
  detail::write_frames(out, seq.sequence());
}

inline SkqFile read_skq(const std::string& path, const TopologyRegistry& registry) {
  std::ifstream in = open_read(path);
  LineReader r(in, path);
  if (r.require("'SKQ 1' header") != "SKQ 1") r.fail("bad magic, expected 'SKQ 1'");
  const std::string topo_name = expect_kv(r, "topology");
  const auto topo_it = registry.find(topo_name);
  if (topo_it == registry.end()) r.fail("unknown topology name '" + topo_name + "'");
  const TopologyPtr& topo = topo_it->second;
  const auto frames = static_cast<std::size_t>(parse_int(r, expect_kv(r, "frames"), "frame count"));

  const std::string kind_line = r.require("'label <id>' or 'segments <n>'");
  const auto kind = split_ws(kind_line);
  if (kind.size() != 2) r.fail("expected 'label <id>' or 'segments <n>', got '" + kind_line + "'");

  std::optional<int> label;
  std::optional<std::vector<LabeledSegment>> segments;
  if (kind[0] == "label") {
    label = static_cast<int>(parse_int(r, kind[1], "label"));
  } else if (kind[0] == "segments") {
    const auto nseg = static_cast<std::size_t>(parse_int(r, kind[1], "segment count"));
    std::vector<LabeledSegment> segs;
    segs.reserve(nseg);
    for (std::size_t i = 0; i < nseg; ++i) {
      const auto toks = split_ws(r.require("segment record"));
      if (toks.size() != 3) r.fail("expected '<start> <end> <label>'");
      LabeledSegment s;
      s.start = static_cast<std::size_t>(parse_int(r, toks[0], "segment start"));
      s.end = static_cast<std::size_t>(parse_int(r, toks[1], "segment end"));
      s.label = static_cast<int>(parse_int(r, toks[2], "segment label"));
      segs.push_back(s);
    }
    try {
      validate_tiling(segs, frames);
    } catch (const Error& e) {
      r.fail(e.what());
    }
    segments = std::move(segs);
  } else {
    r.fail("expected 'label' or 'segments', got '" + kind[0] + "'");
  }

  Mat m = detail::read_frames(r, frames, topo->frame_width());
  try {
    SkeletonSequence seq(topo, std::move(m));
    return SkqFile{std::move(seq), label, std::move(segments)};
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

inline TrimmedClip read_clip(const std::string& path, const TopologyRegistry& registry) {
  SkqFile f = read_skq(path, registry);
  if (!f.label) throw Error(path + ": expected a trimmed clip ('label' record), found segments");
  return TrimmedClip(std::move(f.sequence), *f.label);
}

inline UntrimmedSequence read_untrimmed(const std::string& path, const TopologyRegistry& registry) {
  SkqFile f = read_skq(path, registry);
  if (!f.segments) throw Error(path + ": expected an untrimmed sequence ('segments' record)");
  return UntrimmedSequence(std::move(f.sequence), std::move(*f.segments));
}

// ---------------------------------------------------------------------------
// LBL label-space files

struct LabelSpace {
  std::size_t num_classes = 0;
  int background = -1;  // -1: no designated background class
  std::vector<std::string> names;
};

inline void write_label_space(const LabelSpace& ls, const std::string& path) {
  std::ofstream out = open_write(path);
  out << "LBL 1\n";
  out << "classes " << ls.num_classes << "\n";
  out << "background " << ls.background << "\n";
  for (std::size_t k = 0; k < ls.num_classes; ++k)
    out << k << " " << (k < ls.names.size() ? ls.names[k] : "class_" + std::to_string(k)) << "\n";
}

inline LabelSpace read_label_space(const std::string& path) {
  std::ifstream in = open_read(path);
  LineReader r(in, path);
  if (r.require("'LBL 1' header") != "LBL 1") r.fail("bad magic, expected 'LBL 1'");
  LabelSpace ls;
  ls.num_classes = static_cast<std::size_t>(parse_int(r, expect_kv(r, "classes"), "class count"));
  ls.background = static_cast<int>(parse_int(r, expect_kv(r, "background"), "background id"));
  if (ls.background != -1 && (ls.background < 0 || std::size_t(ls.background) >= ls.num_classes))
    r.fail("background id out of range");
  ls.names.resize(ls.num_classes);
  for (std::size_t k = 0; k < ls.num_classes; ++k) {
    const auto toks = split_ws(r.require("label record"));
    if (toks.size() != 2) r.fail("expected '<id> <name>'");
    const auto id = parse_int(r, toks[0], "class id");
    if (id != static_cast<long long>(k)) r.fail("class ids must be dense and ascending");
    ls.names[k] = toks[1];
  }
  return ls;
}

// ---------------------------------------------------------------------------
// PRD prediction files: per-frame class probabilities

inline void write_prediction(const Mat& scores, const std::string& path) {
  std::ofstream out = open_write(path);
  out << "PRD 1\n";
  out << "frames " << scores.rows << "\n";
  out << "classes " << scores.cols << "\n";
  for (std::size_t t = 0; t < scores.rows; ++t) {
    for (std::size_t k = 0; k < scores.cols; ++k) {
      if (k) out << ' ';
      out << fmt_g9(scores(t, k));
    }
    out << '\n';
  }
}

inline Mat read_prediction(const std::string& path) {
  std::ifstream in = open_read(path);
  LineReader r(in, path);
  if (r.require("'PRD 1' header") != "PRD 1") r.fail("bad magic, expected 'PRD 1'");
  const auto frames = static_cast<std::size_t>(parse_int(r, expect_kv(r, "frames"), "frame count"));
  const auto classes = static_cast<std::size_t>(parse_int(r, expect_kv(r, "classes"), "class count"));
  if (frames < 1 || classes < 1) r.fail("frames and classes must be >= 1");
  return detail::read_frames(r, frames, classes);
}

// ---------------------------------------------------------------------------
// Directory helpers

inline std::vector<std::string> list_files(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error("'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline TopologyPtr find_topology(const std::string& dir) {
  const auto skts = list_files(dir, ".skt");
  if (skts.empty()) throw Error("no .skt topology file in '" + dir + "'");
  if (skts.size() > 1) throw Error("multiple .skt topology files in '" + dir + "'");
  return read_topology(skts[0]);
}

struct LoadedBatch {
  Batch batch;
  TopologyPtr topology;
  std::optional<LabelSpace> labels;
  std::vector<std::string> files;  // clip file paths, index-aligned with batch
};

// Loads every trimmed clip in a dataset directory (topology.skt + *.skq,
// optional labels.lbl), sorted by filename for determinism.
inline LoadedBatch load_batch(const std::string& dir) {
  LoadedBatch out;
  out.topology = find_topology(dir);
  const TopologyRegistry reg = registry_of(out.topology);
  std::vector<TrimmedClip> clips;
  for (const std::string& f : list_files(dir, ".skq")) {
    clips.push_back(read_clip(f, reg));
    out.files.push_back(f);
  }
  out.batch = Batch(std::move(clips));
  if (fs::exists(fs::path(dir) / "labels.lbl"))
    out.labels = read_label_space((fs::path(dir) / "labels.lbl").string());
  return out;
}

struct LoadedUntrimmed {
  std::vector<UntrimmedSequence> sequences;
  TopologyPtr topology;
  std::optional<LabelSpace> labels;
  std::vector<std::string> files;
};

inline LoadedUntrimmed load_untrimmed_dir(const std::string& dir) {
  LoadedUntrimmed out;
  out.topology = find_topology(dir);
  const TopologyRegistry reg = registry_of(out.topology);
  for (const std::string& f : list_files(dir, ".skq")) {
    out.sequences.push_back(read_untrimmed(f, reg));
    out.files.push_back(f);
  }
  if (fs::exists(fs::path(dir) / "labels.lbl"))
    out.labels = read_label_space((fs::path(dir) / "labels.lbl").string());
  return out;
}

// Full-configuration echo written into output directories.
inline void write_run_config(const std::vector<std::pair<std::string, std::string>>& kv,
                             const std::string& path) {
  std::ofstream out = open_write(path);
  for (const auto& [k, v] : kv) out << k << " " << v << "\n";
}

}  // namespace stitchseg::io
