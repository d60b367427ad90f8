#include "rtmtest/property.hpp"

#include <cctype>
#include <sstream>

namespace rtmtest {

PropertyPtr TraceProperty::atom(std::string predicate, std::vector<std::string> args,
                                std::optional<Phase> phase) {
  auto p = std::make_shared<TraceProperty>();
  p->kind = Kind::Atom;
  p->predicate = std::move(predicate);
  p->args = std::move(args);
  p->phase_filter = phase;
  return p;
}

namespace {

PropertyPtr node(TraceProperty::Kind kind, PropertyPtr left, PropertyPtr right = nullptr,
                 int bound = 0) {
  auto p = std::make_shared<TraceProperty>();
  p->kind = kind;
  p->left = std::move(left);
  p->right = std::move(right);
  p->bound = bound;
  return p;
}

}  // namespace

PropertyPtr TraceProperty::negate(PropertyPtr p) { return node(Kind::Not, std::move(p)); }
PropertyPtr TraceProperty::conj(PropertyPtr a, PropertyPtr b) {
  return node(Kind::And, std::move(a), std::move(b));
}
PropertyPtr TraceProperty::disj(PropertyPtr a, PropertyPtr b) {
  return node(Kind::Or, std::move(a), std::move(b));
}
PropertyPtr TraceProperty::implies(PropertyPtr a, PropertyPtr b) {
  return node(Kind::Implies, std::move(a), std::move(b));
}
PropertyPtr TraceProperty::always(PropertyPtr p) { return node(Kind::Always, std::move(p)); }
PropertyPtr TraceProperty::eventually(PropertyPtr p) { return node(Kind::Eventually, std::move(p)); }
PropertyPtr TraceProperty::at_most_consecutive(PropertyPtr p, int bound) {
  if (bound < 1) throw Error(ErrorCode::invalid_argument, "atMostConsecutive bound must be >= 1");
  return node(Kind::AtMostConsecutive, std::move(p), nullptr, bound);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Type { Ident, String, Number, Symbol, End };
  Type type = Type::End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& message, const Token& at) const {
    std::ostringstream msg;
    msg << "line " << at.line << ", column " << at.col << ": " << message;
    throw Error(ErrorCode::parse_error, msg.str());
  }

 private:
  void advance() {
    while (pos_ < text_.size() && (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '#')) {
      if (text_[pos_] == '#') {  // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else {
        bump();
      }
    }
    current_ = {};
    current_.line = line_;
    current_.col = col_;
    if (pos_ >= text_.size()) {
      current_.type = Token::Type::End;
      return;
    }
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string ident;
      while (pos_ < text_.size()) {
        const char d = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-') {
          ident.push_back(d);
          bump();
        } else {
          break;
        }
      }
      current_.type = Token::Type::Ident;
      current_.text = std::move(ident);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        num.push_back(text_[pos_]);
        bump();
      }
      current_.type = Token::Type::Number;
      current_.text = std::move(num);
      return;
    }
    if (c == '"' || c == '\'') {
      const char quote = c;
      bump();
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != quote) {
        s.push_back(text_[pos_]);
        bump();
      }
      if (pos_ >= text_.size()) fail("unterminated string literal", current_);
      bump();  // closing quote
      current_.type = Token::Type::String;
      current_.text = std::move(s);
      return;
    }
    if (c == '=' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      bump();
      bump();
      current_.type = Token::Type::Symbol;
      current_.text = "=>";
      return;
    }
    if (c == '(' || c == ')' || c == ',' || c == '@' || c == '!') {
      bump();
      current_.type = Token::Type::Symbol;
      current_.text = std::string(1, c);
      return;
    }
    fail(std::string("unexpected character '") + c + "'", current_);
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token current_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  PropertyPtr parse() {
    PropertyPtr p = expr();
    const Token& t = lex_.peek();
    if (t.type != Token::Type::End) lex_.fail("trailing input after property", t);
    return p;
  }

 private:
  PropertyPtr expr() {
    PropertyPtr left = disjunction();
    const Token& t = lex_.peek();
    if (is_symbol(t, "=>") || is_ident(t, "implies")) {
      lex_.take();
      return TraceProperty::implies(std::move(left), expr());
    }
    return left;
  }

  PropertyPtr disjunction() {
    PropertyPtr left = conjunction();
    while (is_ident(lex_.peek(), "or")) {
      lex_.take();
      left = TraceProperty::disj(std::move(left), conjunction());
    }
    return left;
  }

  PropertyPtr conjunction() {
    PropertyPtr left = unary();
    while (is_ident(lex_.peek(), "and")) {
      lex_.take();
      left = TraceProperty::conj(std::move(left), unary());
    }
    return left;
  }

  PropertyPtr unary() {
    const Token& t = lex_.peek();
    if (is_ident(t, "not") || is_symbol(t, "!")) {
      lex_.take();
      return TraceProperty::negate(unary());
    }
    return primary();
  }

  PropertyPtr primary() {
    Token t = lex_.take();
    if (is_symbol(t, "(")) {
      PropertyPtr p = expr();
      expect_symbol(")");
      return p;
    }
    if (t.type != Token::Type::Ident) lex_.fail("expected an expression", t);

    if (t.text == "always" || t.text == "eventually") {
      expect_symbol("(");
      PropertyPtr body = expr();
      expect_symbol(")");
      return t.text == "always" ? TraceProperty::always(std::move(body))
                                : TraceProperty::eventually(std::move(body));
    }
    if (t.text == "atMostConsecutive") {
      expect_symbol("(");
      PropertyPtr body = expr();
      expect_symbol(",");
      Token n = lex_.take();
      if (n.type != Token::Type::Number) lex_.fail("expected a bound", n);
      expect_symbol(")");
      return TraceProperty::at_most_consecutive(std::move(body), std::stoi(n.text));
    }
    if (t.text == "true" || t.text == "false") {
      return with_phase(TraceProperty::atom(t.text));
    }

    // Predicate atom: name(args...) with optional @PHASE.
    std::vector<std::string> args;
    if (is_symbol(lex_.peek(), "(")) {
      lex_.take();
      if (!is_symbol(lex_.peek(), ")")) {
        args.push_back(argument());
        while (is_symbol(lex_.peek(), ",")) {
          lex_.take();
          args.push_back(argument());
        }
      }
      expect_symbol(")");
    }
    return with_phase(TraceProperty::atom(t.text, std::move(args)));
  }

  std::string argument() {
    Token t = lex_.take();
    if (t.type == Token::Type::String || t.type == Token::Type::Ident ||
        t.type == Token::Type::Number) {
      return t.text;
    }
    lex_.fail("expected an argument", t);
  }

  PropertyPtr with_phase(PropertyPtr atom) {
    if (is_symbol(lex_.peek(), "@")) {
      lex_.take();
      Token t = lex_.take();
      if (t.type != Token::Type::Ident) lex_.fail("expected a phase name after '@'", t);
      auto p = std::make_shared<TraceProperty>(*atom);
      try {
        p->phase_filter = phase_from_string(t.text);
      } catch (const Error&) {
        lex_.fail("unknown phase '" + t.text + "'", t);
      }
      return p;
    }
    return atom;
  }

  static bool is_symbol(const Token& t, std::string_view s) {
    return t.type == Token::Type::Symbol && t.text == s;
  }
  static bool is_ident(const Token& t, std::string_view s) {
    return t.type == Token::Type::Ident && t.text == s;
  }

  void expect_symbol(std::string_view s) {
    Token t = lex_.take();
    if (!is_symbol(t, s)) lex_.fail("expected '" + std::string(s) + "'", t);
  }

  Lexer lex_;
};

}  // namespace

PropertyPtr parse_property(std::string_view text) { return Parser(text).parse(); }

namespace {

std::string quote_arg(const std::string& a) {
  bool bare = !a.empty();
  for (char c : a) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') bare = false;
  }
  return bare ? a : "\"" + a + "\"";
}

}  // namespace

std::string property_to_string(const TraceProperty& p) {
  using Kind = TraceProperty::Kind;
  switch (p.kind) {
    case Kind::Atom: {
      std::string s = p.predicate;
      if (!(p.args.empty() && (p.predicate == "true" || p.predicate == "false"))) {
        s += "(";
        for (std::size_t i = 0; i < p.args.size(); ++i) {
          if (i) s += ", ";
          s += quote_arg(p.args[i]);
        }
        s += ")";
      }
      if (p.phase_filter) s += std::string(" @ ") + to_string(*p.phase_filter);
      return s;
    }
    case Kind::Not: return "not (" + property_to_string(*p.left) + ")";
    case Kind::And:
      return "(" + property_to_string(*p.left) + " and " + property_to_string(*p.right) + ")";
    case Kind::Or:
      return "(" + property_to_string(*p.left) + " or " + property_to_string(*p.right) + ")";
    case Kind::Implies:
      return "(" + property_to_string(*p.left) + " => " + property_to_string(*p.right) + ")";
    case Kind::Always: return "always(" + property_to_string(*p.left) + ")";
    case Kind::Eventually: return "eventually(" + property_to_string(*p.left) + ")";
    case Kind::AtMostConsecutive:
      return "atMostConsecutive(" + property_to_string(*p.left) + ", " + std::to_string(p.bound) + ")";
  }
  return "?";
}

bool has_temporal_operator(const TraceProperty& p) {
  using Kind = TraceProperty::Kind;
  switch (p.kind) {
    case Kind::Always:
    case Kind::Eventually:
    case Kind::AtMostConsecutive: return true;
    case Kind::Atom: return false;
    default:
      return (p.left && has_temporal_operator(*p.left)) ||
             (p.right && has_temporal_operator(*p.right));
  }
}

namespace {

void collect_phases(const TraceProperty& p, std::set<Phase>& out, bool& unfiltered_atom) {
  if (p.kind == TraceProperty::Kind::Atom) {
    if (p.phase_filter) {
      out.insert(*p.phase_filter);
    } else {
      unfiltered_atom = true;
    }
    return;
  }
  if (p.left) collect_phases(*p.left, out, unfiltered_atom);
  if (p.right) collect_phases(*p.right, out, unfiltered_atom);
}

}  // namespace

std::set<Phase> relevant_phases(const TraceProperty& p) {
  std::set<Phase> out;
  bool unfiltered = false;
  collect_phases(p, out, unfiltered);
  if (unfiltered || out.empty()) return {Phase::Monitored, Phase::Analyzed, Phase::Planned};
  return out;
}

const ConstraintRegistry& EvalContext::effective_registry() const {
  static const ConstraintRegistry defaults = ConstraintRegistry::builtins();
  return registry ? *registry : defaults;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

bool eval_atom(const TraceProperty& p, const Snapshot& s, const EvalContext& ctx) {
  if (p.phase_filter && *p.phase_filter != s.phase) return true;  // vacuous off-phase
  const ConstraintRegistry& reg = ctx.effective_registry();
  // violated(name|any) bridges into the constraint set and needs the registry
  // itself, so it is resolved here rather than as a plain predicate.
  if (p.predicate == "violated") {
    const std::string which = p.args.empty() ? "any" : p.args[0];
    if (which == "any") return !check_all_builtin(s.model, reg).empty();
    return !check_constraints(s.model, {which}, reg).empty();
  }
  if (p.predicate == "valid") {
    return check_all_builtin(s.model, reg).empty();
  }
  return reg.eval_predicate(p.predicate, s.model, p.args);
}

// Positions of `trace` relevant to the body of a temporal operator.
std::vector<std::size_t> domain_of(const TraceProperty& body, const Trace& trace) {
  const std::set<Phase> phases = relevant_phases(body);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
    if (phases.count(trace.snapshots[i].phase)) out.push_back(i);
  }
  return out;
}

struct Failure {
  WitnessWindow window;
};

bool eval_at(const TraceProperty& p, const Trace& trace, std::size_t pos, const EvalContext& ctx,
             std::optional<Failure>* failure);

bool eval_always(const TraceProperty& p, const Trace& trace, std::size_t from,
                 const EvalContext& ctx, std::optional<Failure>* failure) {
  for (std::size_t i : domain_of(*p.left, trace)) {
    if (i < from) continue;
    if (!eval_at(*p.left, trace, i, ctx, nullptr)) {
      if (failure) *failure = Failure{{i, i}};
      return false;
    }
  }
  return true;
}

bool eval_eventually(const TraceProperty& p, const Trace& trace, std::size_t from,
                     const EvalContext& ctx, std::optional<Failure>* failure) {
  for (std::size_t i : domain_of(*p.left, trace)) {
    if (i < from) continue;
    if (eval_at(*p.left, trace, i, ctx, nullptr)) return true;
  }
  if (failure) {
    const std::size_t last = trace.snapshots.empty() ? 0 : trace.snapshots.size() - 1;
    *failure = Failure{{from > last ? last : from, last}};
  }
  return false;
}

bool eval_at_most_consecutive(const TraceProperty& p, const Trace& trace, std::size_t from,
                              const EvalContext& ctx, std::optional<Failure>* failure) {
  const auto domain = domain_of(*p.left, trace);
  std::size_t run = 0;
  std::size_t run_start = 0;
  for (std::size_t k = 0; k < domain.size(); ++k) {
    if (domain[k] < from) continue;
    if (eval_at(*p.left, trace, domain[k], ctx, nullptr)) {
      if (run == 0) run_start = domain[k];
      ++run;
      if (run > static_cast<std::size_t>(p.bound)) {
        if (failure) *failure = Failure{{run_start, domain[k]}};
        return false;
      }
    } else {
      run = 0;
    }
  }
  return true;
}

bool eval_at(const TraceProperty& p, const Trace& trace, std::size_t pos, const EvalContext& ctx,
             std::optional<Failure>* failure) {
  using Kind = TraceProperty::Kind;
  switch (p.kind) {
    case Kind::Atom:
      // An atom outside any position (empty trace) reads vacuously true; the
      // temporal operators own the existential/universal distinction.
      if (pos >= trace.snapshots.size()) return true;
      return eval_atom(p, trace.snapshots[pos], ctx);
    case Kind::Not: return !eval_at(*p.left, trace, pos, ctx, nullptr);
    case Kind::And:
      return eval_at(*p.left, trace, pos, ctx, nullptr) && eval_at(*p.right, trace, pos, ctx, nullptr);
    case Kind::Or:
      return eval_at(*p.left, trace, pos, ctx, nullptr) || eval_at(*p.right, trace, pos, ctx, nullptr);
    case Kind::Implies:
      return !eval_at(*p.left, trace, pos, ctx, nullptr) || eval_at(*p.right, trace, pos, ctx, nullptr);
    case Kind::Always: return eval_always(p, trace, pos, ctx, failure);
    case Kind::Eventually: return eval_eventually(p, trace, pos, ctx, failure);
    case Kind::AtMostConsecutive: return eval_at_most_consecutive(p, trace, pos, ctx, failure);
  }
  return false;
}

}  // namespace

PropertyVerdict evaluate(const TraceProperty& property, const Trace& trace, const EvalContext& ctx) {
  std::optional<Failure> failure;
  bool holds;
  if (has_temporal_operator(property)) {
    holds = eval_at(property, trace, 0, ctx, &failure);
  } else {
    // Implicit always for state properties and boolean combinations.
    auto wrapped = TraceProperty::always(std::make_shared<TraceProperty>(property));
    holds = eval_at(*wrapped, trace, 0, ctx, &failure);
  }
  PropertyVerdict v;
  v.holds = holds;
  if (!holds) v.witness = failure ? failure->window : WitnessWindow{0, 0};
  return v;
}

bool evaluate_state(const TraceProperty& property, const Snapshot& snapshot, const EvalContext& ctx) {
  if (has_temporal_operator(property)) {
    throw Error(ErrorCode::invalid_argument, "state evaluation requires a non-temporal expression");
  }
  Trace t;
  t.snapshots.push_back(snapshot);
  return eval_at(property, t, 0, ctx, nullptr);
}

}  // namespace rtmtest
