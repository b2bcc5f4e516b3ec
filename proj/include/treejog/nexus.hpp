#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treejog/state_tree.hpp"

namespace treejog {

struct TreeSample {
  std::string id;
  StateAnnotatedTree tree;
};

// A BEAST-style tree log: translate table plus state-annotated samples.
struct NexusTreeLog {
  std::map<int, std::string> translate;
  std::vector<TreeSample> samples;
};

// Reads the `trees` block of a NEXUS document. Node annotations of the form
// [&key=value,...] are scanned for `state_tag`; its value is a string of
// 0/1 (with ? or - for missing). Nodes without the tag get all-missing
// states. Node ages are recovered from branch lengths with the deepest leaf
// at age 0. Leaves are numbered by ascending translate id, internal nodes
// follow in preorder. Throws InputError on malformed input.
NexusTreeLog parse_nexus(std::string_view text, std::string_view state_tag);
NexusTreeLog read_nexus_file(const std::string& path, std::string_view state_tag);

// Deterministic NEXUS text: translate ids ascending, children ordered by
// smallest descendant translate id, shortest round-trip number formatting.
std::string write_nexus(const NexusTreeLog& log, std::string_view state_tag);
void write_nexus_file(const std::string& path, const NexusTreeLog& log,
                      std::string_view state_tag);

// Builds a log whose translate table numbers the leaves of the first sample
// 1..n in leaf id order. All samples must share the leaf label set.
NexusTreeLog make_log(std::vector<TreeSample> samples);

// Concatenates per-node states of logs that carry the same trees but
// disjoint feature blocks, in `partition_order` (indices into `logs`).
// Topologies are matched per sample index with a 1e-9 age tolerance.
NexusTreeLog merge_state_logs(std::span<const NexusTreeLog> logs,
                              std::span<const std::size_t> partition_order);

// Same labelled topology, ages within tolerance, identical states on
// corresponding nodes.
bool same_annotated_tree(const StateAnnotatedTree& a, const StateAnnotatedTree& b,
                         double age_tolerance);
bool same_log(const NexusTreeLog& a, const NexusTreeLog& b, double age_tolerance);

// Sample selection shared by the CLI and the pipeline: "last", "first" or a
// zero-based index. Throws InputError when out of range.
std::size_t resolve_sample_index(const NexusTreeLog& log, std::string_view which);

}  // namespace treejog
