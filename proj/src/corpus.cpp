#include "traitlab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

namespace traitlab::corpus {

const char* split_name(Split s) noexcept {
  switch (s) {
    case Split::training:
      return "training";
    case Split::testing:
      return "testing";
    case Split::validation:
      return "validation";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  for (Split s : kSplits) {
    if (name == split_name(s)) return s;
  }
  throw Error(errc::parse_failure, "unknown split name: " + name);
}

const std::vector<ClipRef>& SplitManifest::split(Split s) const {
  switch (s) {
    case Split::testing:
      return testing;
    case Split::validation:
      return validation;
    default:
      return training;
  }
}

std::vector<ClipRef>& SplitManifest::split(Split s) {
  return const_cast<std::vector<ClipRef>&>(
      static_cast<const SplitManifest&>(*this).split(s));
}

std::size_t SplitManifest::uid_count(Split s) const {
  std::unordered_set<std::string> uids;
  for (const ClipRef& c : split(s)) uids.insert(c.uid);
  return uids.size();
}

std::size_t SplitManifest::clip_count() const {
  return training.size() + testing.size() + validation.size();
}

ClipRef parse_clip_id(const std::string& filename) {
  const auto fail = [&]() -> ClipRef {
    throw Error(errc::malformed_clip_name,
                "clip name does not match <video>.<segment>.<ext>: '" +
                    filename + "'");
  };

  const std::size_t ext_dot = filename.rfind('.');
  if (ext_dot == std::string::npos || ext_dot + 1 == filename.size())
    return fail();
  const std::size_t seg_dot = filename.rfind('.', ext_dot - 1);
  if (ext_dot == 0 || seg_dot == std::string::npos || seg_dot == 0)
    return fail();

  const std::string digits = filename.substr(seg_dot + 1, ext_dot - seg_dot - 1);
  if (digits.empty()) return fail();
  long segment = 0;
  for (char ch : digits) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return fail();
    segment = segment * 10 + (ch - '0');
    if (segment > 1000000000L) return fail();
  }

  ClipRef ref;
  ref.clip_id = filename;
  ref.uid = filename.substr(0, seg_dot);
  ref.segment = static_cast<int>(segment);
  return ref;
}

SplitManifest build_splits(std::vector<ClipRef> clips, const SplitQuota& quota) {
  // Ordered map keyed by raw uid bytes; clips of one uid sorted by segment.
  std::map<std::string, std::vector<ClipRef>> by_uid;
  std::set<std::pair<std::string, int>> seen;
  for (ClipRef& c : clips) {
    if (!seen.insert({c.uid, c.segment}).second) {
      throw Error(errc::duplicate_clip,
                  "duplicate (uid, segment) pair at ingest: " + c.uid + "." +
                      std::to_string(c.segment));
    }
    by_uid[c.uid].push_back(std::move(c));
  }

  const int uid_total = static_cast<int>(by_uid.size());
  if (quota.training < 0 || quota.testing < 0 || quota.validation < 0 ||
      quota.total() != uid_total) {
    throw Error(errc::quota_mismatch,
                "split quotas sum to " + std::to_string(quota.total()) +
                    " but the corpus has " + std::to_string(uid_total) +
                    " distinct uids");
  }

  SplitManifest manifest;
  int index = 0;
  for (auto& [uid, group] : by_uid) {
    std::sort(group.begin(), group.end(),
              [](const ClipRef& a, const ClipRef& b) {
                return a.segment < b.segment;
              });
    Split target = Split::validation;
    if (index < quota.training)
      target = Split::training;
    else if (index < quota.training + quota.testing)
      target = Split::testing;
    auto& dst = manifest.split(target);
    dst.insert(dst.end(), std::make_move_iterator(group.begin()),
               std::make_move_iterator(group.end()));
    ++index;
  }
  return manifest;
}

namespace {

std::vector<std::string> uid_list(const std::vector<ClipRef>& clips) {
  std::vector<std::string> uids;
  uids.reserve(clips.size());
  for (const ClipRef& c : clips) uids.push_back(c.uid);
  return uids;
}

}  // namespace

std::vector<std::string> shared_uids(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> sb(b.begin(), b.end());
  std::vector<std::string> out;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::back_inserter(out));
  return out;
}

DisjointVerdict verify_disjoint(const SplitManifest& manifest) {
  std::set<std::string> shared;
  for (std::size_t i = 0; i < kSplits.size(); ++i) {
    for (std::size_t j = i + 1; j < kSplits.size(); ++j) {
      const auto common = shared_uids(uid_list(manifest.split(kSplits[i])),
                                      uid_list(manifest.split(kSplits[j])));
      shared.insert(common.begin(), common.end());
    }
  }
  DisjointVerdict v;
  v.shared_uids.assign(shared.begin(), shared.end());
  v.pass = v.shared_uids.empty();
  return v;
}

OverlapReport overlap_stats(const std::vector<ClipRef>& train,
                            const std::vector<ClipRef>& test) {
  if (train.empty() || test.empty())
    throw Error(errc::empty_split, "overlap_stats requires non-empty splits");

  const std::vector<std::string> train_uid_list = uid_list(train);
  const std::vector<std::string> test_uid_list = uid_list(test);
  const std::unordered_set<std::string> train_uids(train_uid_list.begin(),
                                                   train_uid_list.end());
  const std::unordered_set<std::string> test_uids(test_uid_list.begin(),
                                                  test_uid_list.end());

  std::size_t test_hits = 0;
  for (const ClipRef& c : test)
    if (train_uids.count(c.uid)) ++test_hits;
  std::size_t train_hits = 0;
  for (const ClipRef& c : train)
    if (test_uids.count(c.uid)) ++train_hits;

  OverlapReport r;
  r.test_contaminated_fraction =
      static_cast<double>(test_hits) / static_cast<double>(test.size());
  r.train_contaminated_fraction =
      static_cast<double>(train_hits) / static_cast<double>(train.size());
  r.shared_uids = shared_uids(uid_list(train), uid_list(test));
  return r;
}

}  // namespace traitlab::corpus
