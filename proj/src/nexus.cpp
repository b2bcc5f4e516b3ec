#include "treejog/nexus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "treejog/errors.hpp"

namespace treejog {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_punct(char c) {
  return c == ';' || c == '=' || c == ',' || c == '(' || c == ')' || c == '[' || c == ']' ||
         c == ':';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char get() { return at_end() ? '\0' : text_[pos_++]; }

  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(
                                                                             std::min(pos_, text_.size())),
                                          '\n'));
    throw InputError("nexus line " + std::to_string(line) + ": " + what);
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  // Skips a [...] comment starting at the current '['; nested brackets allowed.
  std::string_view read_comment() {
    std::size_t start = pos_;
    int level = 0;
    do {
      char c = get();
      if (c == '\0') fail("unterminated comment");
      if (c == '[') ++level;
      if (c == ']') --level;
    } while (level > 0);
    return text_.substr(start + 1, pos_ - start - 2);
  }

  void skip_ws_and_comments() {
    for (;;) {
      skip_ws();
      if (peek() != '[') return;
      read_comment();
    }
  }

  // A bare token or a quoted label ('...' with '' escapes, or "...").
  std::string read_word() {
    skip_ws_and_comments();
    std::string out;
    char q = peek();
    if (q == '\'' || q == '"') {
      ++pos_;
      for (;;) {
        char c = get();
        if (c == '\0') fail("unterminated quoted label");
        if (c == q) {
          if (peek() == q) {
            out.push_back(get());
            continue;
          }
          break;
        }
        out.push_back(c);
      }
      return out;
    }
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && !is_punct(peek())) {
      out.push_back(get());
    }
    return out;
  }

  void expect(char c) {
    skip_ws_and_comments();
    if (get() != c) fail(std::string("expected '") + c + "'");
  }

  void skip_statement() {
    for (;;) {
      skip_ws();
      char c = peek();
      if (c == '\0') fail("unterminated command");
      if (c == '[') {
        read_comment();
      } else if (c == '\'' || c == '"') {
        read_word();
      } else {
        ++pos_;
        if (c == ';') return;
      }
    }
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

// Value of `key` inside the body of a [&...] comment, if present.
std::optional<std::string> annotation_value(std::string_view body, std::string_view key) {
  if (body.empty() || body.front() != '&') return std::nullopt;
  body.remove_prefix(1);
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t eq = i;
    while (eq < body.size() && body[eq] != '=' && body[eq] != ',') ++eq;
    std::string_view k = body.substr(i, eq - i);
    while (!k.empty() && std::isspace(static_cast<unsigned char>(k.front()))) k.remove_prefix(1);
    while (!k.empty() && std::isspace(static_cast<unsigned char>(k.back()))) k.remove_suffix(1);
    std::string value;
    std::size_t j = eq;
    if (j < body.size() && body[j] == '=') {
      ++j;
      int brace = 0;
      char quote = '\0';
      for (; j < body.size(); ++j) {
        char c = body[j];
        if (quote) {
          if (c == quote) {
            quote = '\0';
          } else {
            value.push_back(c);
          }
          continue;
        }
        if (c == '"' || c == '\'') {
          quote = c;
        } else if (c == '{') {
          ++brace;
          value.push_back(c);
        } else if (c == '}') {
          --brace;
          value.push_back(c);
        } else if (c == ',' && brace == 0) {
          break;
        } else {
          value.push_back(c);
        }
      }
    }
    if (k == key) {
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
      std::size_t start = value.find_first_not_of(" \t\r\n");
      return start == std::string::npos ? std::string() : value.substr(start);
    }
    i = j + 1;
  }
  return std::nullopt;
}

struct RawNode {
  int parent = -1;
  std::vector<int> children;
  std::string label;
  std::optional<double> length;
  std::optional<std::string> state;
};

class NewickReader {
 public:
  NewickReader(Lexer& lex, std::string_view tag) : lex_(lex), tag_(tag) {}

  std::vector<RawNode> read() {
    int root = node(-1);
    lex_.skip_ws_and_comments();
    if (lex_.peek() == ')') lex_.fail("malformed Newick: unbalanced parentheses");
    if (lex_.peek() != ';') lex_.fail("malformed Newick: expected ';' after tree");
    lex_.get();
    (void)root;
    return std::move(nodes_);
  }

 private:
  int node(int parent) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(RawNode{});
    nodes_[static_cast<std::size_t>(id)].parent = parent;
    trailers(id);
    if (lex_.peek() == '(') {
      lex_.get();
      for (;;) {
        int child = node(id);
        nodes_[static_cast<std::size_t>(id)].children.push_back(child);
        lex_.skip_ws_and_comments();
        char c = lex_.peek();
        if (c == ',') {
          lex_.get();
          continue;
        }
        if (c == ')') {
          lex_.get();
          break;
        }
        lex_.fail("malformed Newick: unbalanced parentheses");
      }
    }
    // Label (leaves) or ignored internal name.
    lex_.skip_ws();
    if (lex_.peek() != '[' && lex_.peek() != ':' && !is_punct(lex_.peek())) {
      nodes_[static_cast<std::size_t>(id)].label = lex_.read_word();
    }
    trailers(id);
    if (lex_.peek() == ':') {
      lex_.get();
      trailers(id);
      std::string num = lex_.read_word();
      double len = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), len);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        lex_.fail("invalid branch length \"" + num + "\"");
      }
      nodes_[static_cast<std::size_t>(id)].length = len;
      trailers(id);
    }
    return id;
  }

  // Whitespace and comments; annotations are searched for the state tag.
  void trailers(int id) {
    for (;;) {
      lex_.skip_ws();
      if (lex_.peek() != '[') return;
      auto body = lex_.read_comment();
      if (auto v = annotation_value(body, tag_)) nodes_[static_cast<std::size_t>(id)].state = *v;
    }
  }

  Lexer& lex_;
  std::string_view tag_;
  std::vector<RawNode> nodes_;
};

Cell state_char(char c, Lexer& lex) {
  switch (c) {
    case '0': return Cell::absent;
    case '1': return Cell::present;
    case '?':
    case '-': return Cell::missing;
    default: lex.fail(std::string("non-binary character '") + c + "' in state string");
  }
}

struct PendingTree {
  std::string id;
  std::vector<RawNode> nodes;
};

TreeSample build_sample(PendingTree&& pending, const std::map<std::string, int>& leaf_rank,
                        Lexer& lex) {
  auto& raw = pending.nodes;
  for (const auto& r : raw) {
    if (!r.children.empty() && r.children.size() != 2) {
      lex.fail("tree " + pending.id + " is not bifurcating");
    }
  }
  std::size_t p = 0;
  bool have_p = false;
  for (const auto& r : raw) {
    if (!r.state) continue;
    if (!have_p) {
      p = r.state->size();
      have_p = true;
    } else if (r.state->size() != p) {
      lex.fail("tree " + pending.id + ": state strings of inconsistent length (" +
               std::to_string(p) + " vs " + std::to_string(r.state->size()) + ")");
    }
  }

  // Leaves first by translate rank, then internal nodes in preorder (raw
  // order is already preorder).
  std::vector<int> leaf_raw;
  std::vector<int> internal_raw;
  for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
    (raw[static_cast<std::size_t>(i)].children.empty() ? leaf_raw : internal_raw).push_back(i);
  }
  std::sort(leaf_raw.begin(), leaf_raw.end(), [&](int a, int b) {
    return leaf_rank.at(raw[static_cast<std::size_t>(a)].label) <
           leaf_rank.at(raw[static_cast<std::size_t>(b)].label);
  });
  std::vector<NodeId> new_id(raw.size());
  NodeId next = 0;
  for (int i : leaf_raw) new_id[static_cast<std::size_t>(i)] = next++;
  for (int i : internal_raw) new_id[static_cast<std::size_t>(i)] = next++;

  // Depth from the root, then age = max leaf depth - depth.
  std::vector<double> depth(raw.size(), 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    if (r.parent < 0) continue;
    if (!r.length) lex.fail("tree " + pending.id + ": missing branch length");
    if (*r.length < 0) lex.fail("tree " + pending.id + ": negative branch length");
    depth[i] = depth[static_cast<std::size_t>(r.parent)] + *r.length;
  }
  double max_depth = 0.0;
  for (int i : leaf_raw) max_depth = std::max(max_depth, depth[static_cast<std::size_t>(i)]);

  std::vector<TreeNode> nodes(raw.size());
  std::vector<Cell> states(raw.size() * p, Cell::missing);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    auto& nd = nodes[static_cast<std::size_t>(new_id[i])];
    nd.parent = r.parent < 0 ? kNoNode : new_id[static_cast<std::size_t>(r.parent)];
    if (!r.children.empty()) {
      nd.children = {new_id[static_cast<std::size_t>(r.children[0])],
                     new_id[static_cast<std::size_t>(r.children[1])]};
    } else {
      nd.label = r.label;
    }
    nd.age = std::max(0.0, max_depth - depth[i]);
    if (r.state) {
      auto row = states.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(new_id[i]) * p);
      for (std::size_t j = 0; j < p; ++j) row[static_cast<std::ptrdiff_t>(j)] = state_char((*r.state)[j], lex);
    }
  }
  try {
    TimeTree tree(std::move(nodes), BranchPolicy::allow_zero);
    return TreeSample{std::move(pending.id), StateAnnotatedTree(std::move(tree), p, std::move(states))};
  } catch (const InputError& e) {
    lex.fail("tree " + pending.id + ": " + e.what());
  }
}

bool needs_quotes(std::string_view label) {
  if (label.empty()) return true;
  return std::any_of(label.begin(), label.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || is_punct(c) || c == '\'' || c == '"';
  });
}

std::string quote_label(std::string_view label) {
  if (!needs_quotes(label)) return std::string(label);
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

NexusTreeLog parse_nexus(std::string_view text, std::string_view state_tag) {
  Lexer lex(text);
  NexusTreeLog log;
  bool saw_trees = false;
  bool have_translate = false;
  std::vector<PendingTree> pending;

  lex.skip_ws_and_comments();
  if (lex.peek() == '#') {
    auto head = lex.read_word();
    if (!iequals(head, "#NEXUS")) lex.fail("expected #NEXUS header");
  }
  for (;;) {
    lex.skip_ws_and_comments();
    if (lex.at_end()) break;
    auto word = lex.read_word();
    if (!iequals(word, "begin")) lex.fail("expected 'begin', got \"" + word + "\"");
    auto block = lex.read_word();
    lex.expect(';');
    const bool is_trees = iequals(block, "trees");
    saw_trees = saw_trees || is_trees;
    for (;;) {
      lex.skip_ws_and_comments();
      if (lex.at_end()) lex.fail("block " + block + " is missing 'end;'");
      auto cmd = lex.read_word();
      if (iequals(cmd, "end") || iequals(cmd, "endblock")) {
        lex.expect(';');
        break;
      }
      if (!is_trees) {
        lex.skip_statement();
      } else if (iequals(cmd, "translate")) {
        have_translate = true;
        for (;;) {
          lex.skip_ws_and_comments();
          if (lex.peek() == ';') {
            lex.get();
            break;
          }
          auto key = lex.read_word();
          auto label = lex.read_word();
          int id = 0;
          auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
          if (ec != std::errc() || ptr != key.data() + key.size()) {
            lex.fail("translate key \"" + key + "\" is not an integer");
          }
          if (!log.translate.emplace(id, label).second) {
            lex.fail("duplicate translate id " + key);
          }
          lex.skip_ws_and_comments();
          if (lex.peek() == ',') lex.get();
        }
      } else if (iequals(cmd, "tree") || iequals(cmd, "utree")) {
        lex.skip_ws_and_comments();
        if (lex.peek() == '*') lex.get();
        PendingTree tree;
        tree.id = lex.read_word();
        lex.expect('=');
        lex.skip_ws_and_comments();
        tree.nodes = NewickReader(lex, state_tag).read();
        pending.push_back(std::move(tree));
      } else if (cmd.empty()) {
        lex.fail(std::string("unexpected character '") + lex.peek() + "'");
      } else {
        lex.skip_statement();
      }
    }
  }
  if (!saw_trees) throw InputError("nexus: no trees block");

  // Resolve leaf tokens to labels and fix the leaf ordering.
  std::map<std::string, int> rank;
  if (have_translate) {
    int r = 0;
    for (const auto& [id, label] : log.translate) rank[label] = r++;
  }
  std::set<std::string> reference_labels;
  for (std::size_t t = 0; t < pending.size(); ++t) {
    std::set<std::string> labels;
    for (auto& nd : pending[t].nodes) {
      if (!nd.children.empty()) continue;
      if (have_translate) {
        int id = 0;
        auto [ptr, ec] = std::from_chars(nd.label.data(), nd.label.data() + nd.label.size(), id);
        auto it = ec == std::errc() && ptr == nd.label.data() + nd.label.size()
                      ? log.translate.find(id)
                      : log.translate.end();
        if (it == log.translate.end()) {
          // Labels spelled out in full are accepted as well.
          if (rank.count(nd.label) == 0) {
            throw InputError("nexus tree " + pending[t].id + ": unknown translate id \"" +
                             nd.label + "\"");
          }
        } else {
          nd.label = it->second;
        }
      } else if (rank.count(nd.label) == 0) {
        if (t > 0) {
          throw InputError("nexus tree " + pending[t].id + ": unexpected leaf \"" + nd.label + "\"");
        }
        int r = static_cast<int>(rank.size());
        rank[nd.label] = r;
        log.translate.emplace(r + 1, nd.label);
      }
      if (!labels.insert(nd.label).second) {
        throw InputError("nexus tree " + pending[t].id + ": duplicate leaf \"" + nd.label + "\"");
      }
    }
    if (t == 0) {
      reference_labels = labels;
    } else if (labels != reference_labels) {
      throw InputError("nexus tree " + pending[t].id + ": leaf set differs from the first tree");
    }
  }

  std::size_t p = 0;
  for (std::size_t t = 0; t < pending.size(); ++t) {
    auto sample = build_sample(std::move(pending[t]), rank, lex);
    if (t == 0) {
      p = sample.tree.features();
    } else if (sample.tree.features() != p) {
      throw InputError("nexus tree " + sample.id + ": state length " +
                       std::to_string(sample.tree.features()) + " differs from " +
                       std::to_string(p));
    }
    log.samples.push_back(std::move(sample));
  }
  return log;
}

NexusTreeLog read_nexus_file(const std::string& path, std::string_view state_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tree file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_nexus(ss.str(), state_tag);
}

std::string write_nexus(const NexusTreeLog& log, std::string_view state_tag) {
  std::map<std::string, int> id_of;
  for (const auto& [id, label] : log.translate) id_of[label] = id;

  std::ostringstream out;
  out << "#NEXUS\n\nBegin trees;\n";
  if (!log.translate.empty()) {
    out << "\tTranslate\n";
    std::size_t k = 0;
    for (const auto& [id, label] : log.translate) {
      out << "\t\t" << id << ' ' << quote_label(label)
          << (++k < log.translate.size() ? ",\n" : "\n");
    }
    out << "\t\t;\n";
  }
  for (const auto& sample : log.samples) {
    const auto& st = sample.tree;
    const auto& tree = st.tree();
    std::vector<int> min_id(tree.size());
    for (NodeId v : tree.postorder()) {
      const auto& nd = tree.node(v);
      if (nd.is_leaf()) {
        auto it = id_of.find(nd.label);
        if (it == id_of.end()) {
          throw InputError("write_nexus: leaf \"" + nd.label + "\" missing from translate table");
        }
        min_id[static_cast<std::size_t>(v)] = it->second;
      } else {
        min_id[static_cast<std::size_t>(v)] = std::min(min_id[static_cast<std::size_t>(nd.children[0])],
                                                       min_id[static_cast<std::size_t>(nd.children[1])]);
      }
    }
    std::string text;
    auto annotate = [&](NodeId v) {
      if (st.features() == 0) return;
      auto s = st.states(v);
      if (std::all_of(s.begin(), s.end(), [](Cell c) { return c == Cell::missing; })) return;
      text += "[&";
      text += state_tag;
      text += "=\"";
      for (Cell c : s) text.push_back(cell_char(c));
      text += "\"]";
    };
    // Explicit stack: (node, next child index).
    std::vector<std::pair<NodeId, int>> stack{{tree.root(), 0}};
    while (!stack.empty()) {
      auto& [v, k] = stack.back();
      const auto& nd = tree.node(v);
      if (nd.is_leaf() || k == 2) {
        if (nd.is_leaf()) text += std::to_string(min_id[static_cast<std::size_t>(v)]);
        else text.push_back(')');
        annotate(v);
        if (nd.parent != kNoNode) {
          text.push_back(':');
          text += format_number(tree.branch_length(v));
        }
        stack.pop_back();
        continue;
      }
      auto [a, b] = nd.children;
      if (min_id[static_cast<std::size_t>(b)] < min_id[static_cast<std::size_t>(a)]) std::swap(a, b);
      if (k == 0) text.push_back('(');
      else text.push_back(',');
      NodeId next = k == 0 ? a : b;
      ++k;
      stack.emplace_back(next, 0);
    }
    out << "tree " << quote_label(sample.id) << " = [&R] " << text << ";\n";
  }
  out << "End;\n";
  return out.str();
}

void write_nexus_file(const std::string& path, const NexusTreeLog& log,
                      std::string_view state_tag) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << write_nexus(log, state_tag);
}

NexusTreeLog make_log(std::vector<TreeSample> samples) {
  NexusTreeLog log;
  if (!samples.empty()) {
    const auto& tree = samples.front().tree.tree();
    int id = 1;
    for (NodeId l : tree.leaves()) log.translate.emplace(id++, tree.node(l).label);
  }
  std::set<std::string> labels;
  for (const auto& [id, label] : log.translate) labels.insert(label);
  for (const auto& s : samples) {
    std::set<std::string> mine;
    for (NodeId l : s.tree.tree().leaves()) mine.insert(s.tree.tree().node(l).label);
    if (mine != labels) throw InputError("make_log: sample " + s.id + " has a different leaf set");
  }
  log.samples = std::move(samples);
  return log;
}

NexusTreeLog merge_state_logs(std::span<const NexusTreeLog> logs,
                              std::span<const std::size_t> partition_order) {
  if (logs.empty()) throw InputError("merge: no logs given");
  std::vector<std::size_t> sorted(partition_order.begin(), partition_order.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != logs.size() || sorted[i] != i) {
      throw InputError("merge: partition order must list every log exactly once");
    }
  }
  const auto& base = logs[partition_order[0]];
  for (auto k : partition_order) {
    if (logs[k].samples.size() != base.samples.size()) {
      throw InputError("merge: logs have differing sample counts (" +
                       std::to_string(logs[k].samples.size()) + " vs " +
                       std::to_string(base.samples.size()) + ")");
    }
  }
  NexusTreeLog merged;
  merged.translate = base.translate;
  for (std::size_t s = 0; s < base.samples.size(); ++s) {
    const auto& base_tree = base.samples[s].tree.tree();
    std::size_t total = 0;
    std::vector<std::vector<NodeId>> maps;
    for (auto k : partition_order) {
      const auto& other = logs[k].samples[s].tree;
      auto map = match_trees(base_tree, other.tree(), 1e-9);
      if (!map) {
        throw InputError("merge: topology mismatch at sample " + std::to_string(s) + " (partition " +
                         std::to_string(k) + ")");
      }
      maps.push_back(std::move(*map));
      total += other.features();
    }
    std::vector<Cell> states;
    states.reserve(base_tree.size() * total);
    for (NodeId v = 0; v < static_cast<NodeId>(base_tree.size()); ++v) {
      for (std::size_t i = 0; i < partition_order.size(); ++i) {
        auto part = logs[partition_order[i]].samples[s].tree.states(maps[i][static_cast<std::size_t>(v)]);
        states.insert(states.end(), part.begin(), part.end());
      }
    }
    merged.samples.push_back(
        TreeSample{base.samples[s].id, StateAnnotatedTree(base_tree, total, std::move(states))});
  }
  return merged;
}

bool same_annotated_tree(const StateAnnotatedTree& a, const StateAnnotatedTree& b,
                         double age_tolerance) {
  if (a.features() != b.features()) return false;
  auto map = match_trees(a.tree(), b.tree(), age_tolerance);
  if (!map) return false;
  for (NodeId v = 0; v < static_cast<NodeId>(a.tree().size()); ++v) {
    auto sa = a.states(v);
    auto sb = b.states((*map)[static_cast<std::size_t>(v)]);
    if (!std::equal(sa.begin(), sa.end(), sb.begin(), sb.end())) return false;
  }
  return true;
}

bool same_log(const NexusTreeLog& a, const NexusTreeLog& b, double age_tolerance) {
  if (a.translate != b.translate || a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i].id != b.samples[i].id) return false;
    if (!same_annotated_tree(a.samples[i].tree, b.samples[i].tree, age_tolerance)) return false;
  }
  return true;
}

std::size_t resolve_sample_index(const NexusTreeLog& log, std::string_view which) {
  if (log.samples.empty()) throw InputError("tree log contains no samples");
  if (which == "last") return log.samples.size() - 1;
  if (which == "first") return 0;
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(which.data(), which.data() + which.size(), idx);
  if (ec != std::errc() || ptr != which.data() + which.size()) {
    throw InputError("invalid sample index \"" + std::string(which) + "\"");
  }
  if (idx >= log.samples.size()) {
    throw InputError("sample index " + std::to_string(idx) + " out of range (log has " +
                     std::to_string(log.samples.size()) + " samples)");
  }
  return idx;
}

}  // namespace treejog
