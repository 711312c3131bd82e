// Minimal strict XML reader for checking emitted SVG. Rejects unbalanced
// tags, unquoted attributes, and bare '<'/'&' in text.
#pragma once

#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace xml_lite {

struct Node {
  std::string tag;
  std::map<std::string, std::string> attrs;
  std::vector<Node> children;
  std::string text;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Node parse_document() {
    skip_prolog();
    Node root = parse_element();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("xml: " + what + " at offset " + std::to_string(pos_));
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char get() {
    if (pos_ >= s_.size()) throw std::runtime_error("xml: unexpected end of input");
    return s_[pos_++];
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void skip_prolog() {
    skip_ws();
    while (pos_ + 1 < s_.size() && s_[pos_] == '<' &&
           (s_[pos_ + 1] == '?' || s_[pos_ + 1] == '!')) {
      const std::size_t end = s_.find('>', pos_);
      if (end == std::string::npos) fail("unterminated prolog");
      pos_ = end + 1;
      skip_ws();
    }
  }

  std::string parse_name() {
    const std::size_t begin = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ':' ||
            s_[pos_] == '-' || s_[pos_] == '_' || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ == begin) fail("expected a name");
    return s_.substr(begin, pos_ - begin);
  }

  void check_entity() {
    const std::size_t semi = s_.find(';', pos_);
    if (semi == std::string::npos || semi - pos_ > 8) fail("bad entity reference");
    const std::string name = s_.substr(pos_, semi - pos_);
    if (name != "amp" && name != "lt" && name != "gt" && name != "quot" && name != "apos" &&
        !(name.size() > 1 && name[0] == '#')) {
      fail("unknown entity &" + name + ";");
    }
    pos_ = semi + 1;
  }

  std::string parse_attr_value() {
    const char quote = get();
    if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
    std::string value;
    for (;;) {
      const char c = get();
      if (c == quote) break;
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        check_entity();
        value.push_back('&');
        continue;
      }
      value.push_back(c);
    }
    return value;
  }

  Node parse_element() {
    if (get() != '<') fail("expected '<'");
    Node node;
    node.tag = parse_name();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c == '/') {
        ++pos_;
        if (get() != '>') fail("expected '>' after '/'");
        return node;  // self-closing
      }
      if (c == '>') {
        ++pos_;
        break;
      }
      const std::string name = parse_name();
      skip_ws();
      if (get() != '=') fail("expected '=' in attribute");
      skip_ws();
      if (!node.attrs.emplace(name, parse_attr_value()).second)
        fail("duplicate attribute " + name);
    }

    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated element <" + node.tag + ">");
      const char c = peek();
      if (c == '<') {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
          pos_ += 2;
          const std::string closing = parse_name();
          if (closing != node.tag)
            fail("mismatched </" + closing + "> for <" + node.tag + ">");
          skip_ws();
          if (get() != '>') fail("expected '>' in closing tag");
          return node;
        }
        if (pos_ + 3 < s_.size() && s_.compare(pos_, 4, "<!--") == 0) {
          const std::size_t end = s_.find("-->", pos_);
          if (end == std::string::npos) fail("unterminated comment");
          pos_ = end + 3;
          continue;
        }
        node.children.push_back(parse_element());
        continue;
      }
      if (c == '&') {
        ++pos_;
        check_entity();
        node.text.push_back('&');
        continue;
      }
      node.text.push_back(get());
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

inline Node parse(const std::string& text) { return Parser(text).parse_document(); }

inline void collect(const Node& node, const std::string& tag, std::vector<const Node*>* out) {
  if (node.tag == tag) out->push_back(&node);
  for (const auto& child : node.children) collect(child, tag, out);
}

inline std::vector<const Node*> find_all(const Node& root, const std::string& tag) {
  std::vector<const Node*> out;
  collect(root, tag, &out);
  return out;
}

// Elements of a tag filtered by their class attribute.
inline std::vector<const Node*> find_class(const Node& root, const std::string& tag,
                                           const std::string& cls) {
  std::vector<const Node*> out;
  for (const Node* node : find_all(root, tag)) {
    const auto it = node->attrs.find("class");
    if (it != node->attrs.end() && it->second == cls) out.push_back(node);
  }
  return out;
}

}  // namespace xml_lite
