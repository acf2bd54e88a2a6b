#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "phyloclust/error.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

struct TreeNode {
  int parent = -1;
  std::vector<int> children;
  double length = 0.0;            // branch to parent, substitutions/site
  std::optional<double> support;  // in [0,1]
  std::string label;              // tip name, or non-numeric internal name
};

enum class SupportScale { None, Proportion, Percent };

/// Rooted tree with parent links. Nodes are stored in a flat vector; children keep input order.
class PhyloTree {
 public:
  std::vector<TreeNode> nodes;
  int root = -1;
  std::size_t missing_lengths = 0;  // branches that had no length in the input
  SupportScale support_scale = SupportScale::None;

  int add_node(int parent, double length = 0.0, std::string label = {}) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{parent, {}, length, std::nullopt, std::move(label)});
    if (parent >= 0)
      nodes[parent].children.push_back(id);
    else
      root = id;
    return id;
  }

  std::size_t node_count() const { return nodes.size(); }
  bool is_tip(int v) const { return nodes[v].children.empty(); }
  const TreeNode& operator[](int v) const { return nodes[v]; }
  TreeNode& operator[](int v) { return nodes[v]; }

  std::vector<int> preorder() const {
    std::vector<int> order;
    if (root < 0) return order;
    order.reserve(nodes.size());
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      const auto& ch = nodes[v].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return order;
  }

  /// Children before parents; siblings left to right.
  std::vector<int> postorder() const {
    std::vector<int> order;
    if (root < 0) return order;
    order.reserve(nodes.size());
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < nodes[v].children.size()) {
        const int child = nodes[v].children[next++];
        stack.emplace_back(child, 0);
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
    return order;
  }

  /// Tip node ids in left-to-right order.
  std::vector<int> tips() const {
    std::vector<int> out;
    for (int v : preorder())
      if (is_tip(v)) out.push_back(v);
    return out;
  }

  std::vector<std::string> tip_labels() const {
    std::vector<std::string> out;
    for (int v : tips()) out.push_back(nodes[v].label);
    return out;
  }

  std::size_t tip_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.children.empty() ? 1 : 0;
    return n;
  }

  std::unordered_map<std::string, int> tip_index() const {
    std::unordered_map<std::string, int> out;
    for (int v : tips()) out.emplace(nodes[v].label, v);
    return out;
  }

  /// Throws when the node table is not a single rooted tree with unique tip labels and lengths >= 0.
  void validate() const {
    if (root < 0 || root >= static_cast<int>(nodes.size()) || nodes[root].parent != -1)
      throw Error(ErrorKind::BadFormat, "tree has no valid root");
    const auto order = preorder();
    if (order.size() != nodes.size()) throw Error(ErrorKind::BadFormat, "tree is not connected");
    std::unordered_set<std::string> seen;
    for (int v : order) {
      for (int c : nodes[v].children)
        if (nodes[c].parent != v) throw Error(ErrorKind::BadFormat, "inconsistent parent link");
      if (nodes[v].length < 0) throw Error(ErrorKind::NegativeBranchLength, std::to_string(nodes[v].length));
      if (is_tip(v) && !seen.insert(nodes[v].label).second)
        throw Error(ErrorKind::DuplicateTipLabel, nodes[v].label);
    }
  }
};

namespace detail {

class NewickReader {
 public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_blank();
    return pos_ >= text_.size();
  }

  PhyloTree read_one() {
    PhyloTree tree;
    int cur = tree.add_node(-1);
    int depth = 0;
    bool after_close = false;  // a ')' was just consumed; label/length belong to cur
    bool labeled = false;
    bool has_length = false;
    std::vector<bool> length_seen{false};

    auto finish_node = [&] {
      if (!has_length && cur != tree.root) ++tree.missing_lengths;
      labeled = false;
      has_length = false;
      after_close = false;
    };

    for (;;) {
      skip_blank();
      if (pos_ >= text_.size()) {
        if (depth > 0) throw Error(ErrorKind::UnbalancedParentheses, "unterminated '('");
        throw Error(ErrorKind::BadFormat, "missing ';'");
      }
      const char c = text_[pos_];
      if (c == '(') {
        if (labeled || has_length || after_close)
          throw Error(ErrorKind::BadFormat, "unexpected '(' at offset " + std::to_string(pos_));
        ++pos_;
        ++depth;
        cur = tree.add_node(cur);
      } else if (c == ',') {
        ++pos_;
        if (depth == 0) throw Error(ErrorKind::UnbalancedParentheses, "',' outside parentheses");
        finish_node();
        cur = tree.add_node(tree.nodes[cur].parent);
      } else if (c == ')') {
        ++pos_;
        if (depth == 0) throw Error(ErrorKind::UnbalancedParentheses, "unmatched ')'");
        --depth;
        finish_node();
        cur = tree.nodes[cur].parent;
        after_close = true;
      } else if (c == ':') {
        ++pos_;
        if (has_length) throw Error(ErrorKind::BadFormat, "second branch length");
        skip_blank();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
        const auto value = text::to_double(text_.substr(start, pos_ - start));
        if (!value) throw Error(ErrorKind::BadFormat, "bad branch length '" + std::string(text_.substr(start, pos_ - start)) + "'");
        if (*value < 0) throw Error(ErrorKind::NegativeBranchLength, std::string(text_.substr(start, pos_ - start)));
        tree.nodes[cur].length = *value;
        has_length = true;
      } else if (c == ';') {
        ++pos_;
        if (depth != 0) throw Error(ErrorKind::UnbalancedParentheses, std::to_string(depth) + " unclosed '('");
        if (!has_length) tree.nodes[cur].length = 0.0;  // root length is optional
        break;
      } else {
        if (labeled || has_length) throw Error(ErrorKind::BadFormat, "unexpected text at offset " + std::to_string(pos_));
        tree.nodes[cur].label = read_label();
        labeled = true;
      }
    }
    resolve_supports(tree);
    check_tips(tree);
    return tree;
  }

 private:
  static bool is_delimiter(char c) {
    return c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || text::is_space(c);
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      if (text::is_space(text_[pos_])) {
        ++pos_;
      } else if (text_[pos_] == '[') {
        const auto close = text_.find(']', pos_);
        if (close == std::string_view::npos) throw Error(ErrorKind::BadFormat, "unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  std::string read_label() {
    std::string label;
    if (text_[pos_] == '\'') {
      ++pos_;
      for (;;) {
        if (pos_ >= text_.size()) throw Error(ErrorKind::BadFormat, "unterminated quoted label");
        if (text_[pos_] == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            label += '\'';
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        label += text_[pos_++];
      }
      return label;
    }
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) label += text_[pos_++];
    return label;
  }

  // Numeric internal labels are supports; percent scale when any exceeds 1.
  static void resolve_supports(PhyloTree& tree) {
    bool any = false;
    bool percent = false;
    for (auto& node : tree.nodes) {
      if (node.children.empty() || node.label.empty()) continue;
      if (auto v = text::to_double(node.label)) {
        if (*v < 0 || *v > 100) throw Error(ErrorKind::BadFormat, "support value out of range: " + node.label);
        node.support = *v;
        node.label.clear();
        any = true;
        percent = percent || *v > 1.0;
      }
    }
    if (!any) return;
    tree.support_scale = percent ? SupportScale::Percent : SupportScale::Proportion;
    if (percent)
      for (auto& node : tree.nodes)
        if (node.support) *node.support /= 100.0;
  }

  static void check_tips(const PhyloTree& tree) {
    std::unordered_set<std::string> seen;
    for (const auto& node : tree.nodes) {
      if (!node.children.empty()) continue;
      if (node.label.empty()) throw Error(ErrorKind::BadFormat, "unlabeled tip");
      if (!seen.insert(node.label).second) throw Error(ErrorKind::DuplicateTipLabel, node.label);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline bool needs_quotes(std::string_view label) {
  for (char c : label)
    if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || c == ']' || c == '\'' ||
        text::is_space(c))
      return true;
  return false;
}

inline std::string quote_label(std::string_view label) {
  if (!needs_quotes(label)) return std::string(label);
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

}  // namespace detail

/// Parses exactly one Newick tree. Whitespace and [comments] are insignificant.
inline PhyloTree parse_newick(std::string_view text) {
  detail::NewickReader reader(text);
  PhyloTree tree = reader.read_one();
  if (!reader.at_end()) throw Error(ErrorKind::TrailingGarbage, "text after ';'");
  return tree;
}

/// Parses a file holding any number of ';'-terminated trees.
inline std::vector<PhyloTree> parse_newick_list(std::string_view text) {
  detail::NewickReader reader(text);
  std::vector<PhyloTree> trees;
  while (!reader.at_end()) trees.push_back(reader.read_one());
  if (trees.empty()) throw Error(ErrorKind::EmptyInput, "no trees");
  return trees;
}

/// Supports are written as proportions, so parse(write(t)) reproduces t.
inline std::string write_newick(const PhyloTree& tree) {
  std::string out;
  if (tree.root < 0) return ";\n";
  struct Frame {
    int node;
    std::size_t next;
  };
  std::vector<Frame> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto& frame = stack.back();
    const TreeNode& node = tree.nodes[frame.node];
    if (!node.children.empty() && frame.next < node.children.size()) {
      out += frame.next == 0 ? '(' : ',';
      stack.push_back({node.children[frame.next++], 0});
      continue;
    }
    if (!node.children.empty()) out += ')';
    if (node.support && !node.children.empty())
      out += text::format_double(*node.support);
    else
      out += detail::quote_label(node.label);
    if (frame.node != tree.root || node.length != 0.0) {
      out += ':';
      out += text::format_double(node.length);
    }
    stack.pop_back();
  }
  out += ";\n";
  return out;
}

}  // namespace phyloclust
