#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "traitlab/errors.hpp"

namespace traitlab::corpus {

// One videoclip. Several clips cut from the same source video share a uid;
// uid is always a prefix of clip_id.
struct ClipRef {
  std::string clip_id;  // full clip name, e.g. "Gx72a.003.mp4"
  std::string uid;      // source-video group key, e.g. "Gx72a"
  int segment = 0;      // non-negative

  friend bool operator==(const ClipRef&, const ClipRef&) = default;
};

enum class Split { training = 0, testing = 1, validation = 2 };

inline constexpr std::array<Split, 3> kSplits = {Split::training, Split::testing,
                                                 Split::validation};

const char* split_name(Split s) noexcept;
Split split_from_name(const std::string& name);  // throws parse_failure

struct SplitQuota {
  int training = 0;
  int testing = 0;
  int validation = 0;
  int total() const { return training + testing + validation; }
};

// Grouped partition of a corpus. Clips appear in exactly one split; a
// manifest built by build_splits has pairwise-disjoint uid sets.
struct SplitManifest {
  std::vector<ClipRef> training;
  std::vector<ClipRef> testing;
  std::vector<ClipRef> validation;

  const std::vector<ClipRef>& split(Split s) const;
  std::vector<ClipRef>& split(Split s);
  std::size_t uid_count(Split s) const;
  std::size_t clip_count() const;
};

struct DisjointVerdict {
  bool pass = false;
  std::vector<std::string> shared_uids;  // sorted, unique
};

struct OverlapReport {
  double test_contaminated_fraction = 0.0;   // test clips whose uid occurs in train
  double train_contaminated_fraction = 0.0;  // train clips whose uid occurs in test
  std::vector<std::string> shared_uids;      // sorted, unique
};

// Clip names follow "<video>.<segment>.<ext>". The uid is everything before
// the final ".<digits>.<ext>" suffix; the digits are the segment number.
// Throws malformed_clip_name when the name does not match.
ClipRef parse_clip_id(const std::string& filename);

// Deterministic grouped split: uids sorted bytewise ascending, then the first
// quota.training uids go to training, the next quota.testing to testing, the
// rest to validation. Every clip follows its uid; clips of one uid are
// ordered by segment. Duplicate (uid, segment) pairs are rejected at ingest.
SplitManifest build_splits(std::vector<ClipRef> clips, const SplitQuota& quota);

// Pass iff the uid sets of every pair of splits are disjoint.
DisjointVerdict verify_disjoint(const SplitManifest& manifest);

// Cross-split contamination fractions, exact clip-count ratios.
OverlapReport overlap_stats(const std::vector<ClipRef>& train,
                            const std::vector<ClipRef>& test);

// Sorted unique uids occurring in both lists.
std::vector<std::string> shared_uids(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b);

}  // namespace traitlab::corpus
