#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace histlogic {

/// A statement about a system: a finite tree over named elementary
/// statements and the connectives not / and / or. Formulas carry no
/// meaning by themselves; a framework's phi mapping turns them into
/// projectors (or a sample space binding turns them into subsets).
class Formula {
 public:
  enum class Kind { Elementary, Not, And, Or };

  static Formula elementary(std::string name) {
    return Formula(std::make_shared<Node>(Node{Kind::Elementary, std::move(name), nullptr, nullptr}));
  }
  static Formula negation(Formula f) {
    return Formula(std::make_shared<Node>(Node{Kind::Not, {}, f.node_, nullptr}));
  }
  static Formula conjunction(Formula l, Formula r) {
    return Formula(std::make_shared<Node>(Node{Kind::And, {}, l.node_, r.node_}));
  }
  static Formula disjunction(Formula l, Formula r) {
    return Formula(std::make_shared<Node>(Node{Kind::Or, {}, l.node_, r.node_}));
  }

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  Formula child() const { return Formula(node_->left); }
  Formula left() const { return Formula(node_->left); }
  Formula right() const { return Formula(node_->right); }

  void collect_names(std::vector<std::string>& out) const {
    switch (kind()) {
      case Kind::Elementary: out.push_back(name()); break;
      case Kind::Not: child().collect_names(out); break;
      case Kind::And:
      case Kind::Or:
        left().collect_names(out);
        right().collect_names(out);
        break;
    }
  }

  std::string str() const {
    switch (kind()) {
      case Kind::Elementary: return name();
      case Kind::Not: return "~" + child().str();
      case Kind::And: return "(" + left().str() + " & " + right().str() + ")";
      case Kind::Or: return "(" + left().str() + " | " + right().str() + ")";
    }
    return {};
  }

 private:
  struct Node {
    Kind kind;
    std::string name;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };

  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

inline Formula operator!(const Formula& f) { return Formula::negation(f); }
inline Formula operator&(const Formula& l, const Formula& r) { return Formula::conjunction(l, r); }
inline Formula operator|(const Formula& l, const Formula& r) { return Formula::disjunction(l, r); }

inline Formula stmt(std::string name) { return Formula::elementary(std::move(name)); }

}  // namespace histlogic
