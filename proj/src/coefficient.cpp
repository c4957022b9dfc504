#include "chronospec/coefficient.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace chronospec {

namespace expr {

enum class Kind { Number, Time, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Node {
  Kind kind;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

double eval(const Node& n, double t) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Time: return t;
    case Kind::Add: return eval(*n.lhs, t) + eval(*n.rhs, t);
    case Kind::Sub: return eval(*n.lhs, t) - eval(*n.rhs, t);
    case Kind::Mul: return eval(*n.lhs, t) * eval(*n.rhs, t);
    case Kind::Div: return eval(*n.lhs, t) / eval(*n.rhs, t);
    case Kind::Pow: return std::pow(eval(*n.lhs, t), eval(*n.rhs, t));
    case Kind::Neg: return -eval(*n.lhs, t);
    case Kind::Sin: return std::sin(eval(*n.lhs, t));
    case Kind::Cos: return std::cos(eval(*n.lhs, t));
    case Kind::Exp: return std::exp(eval(*n.lhs, t));
  }
  return 0.0;
}

/// Recursive-descent parser; '^' binds tighter than unary minus and is right-associative.
class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  NodePtr parse() {
    NodePtr root = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return root;
  }

 private:
  static NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    return std::make_shared<const Node>(Node{k, v, std::move(a), std::move(b)});
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression: " + msg + " at position " + std::to_string(pos_),
                     static_cast<long>(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, lhs, parse_product());
      else if (accept('-')) lhs = make(Kind::Sub, lhs, parse_product());
      else return lhs;
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = make(Kind::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make(Kind::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make(Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view word = s_.substr(start, pos_ - start);
      if (word == "t") return make(Kind::Time);
      Kind k;
      if (word == "sin") k = Kind::Sin;
      else if (word == "cos") k = Kind::Cos;
      else if (word == "exp") k = Kind::Exp;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(word) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      NodePtr arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return make(k, arg);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return make(Kind::Number, nullptr, nullptr, v);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace expr

namespace {

std::vector<double> natural_spline_second_derivs(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  // Thomas algorithm on the interior equations, m[0] = m[n-1] = 0.
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
    const double rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i > 0; --i) m[i] = d[i] - c[i] * m[i + 1];
  return m;
}

double eval_spline(const CoefficientFn::SplineTable& s, double t) {
  const auto& x = s.t;
  const double tol = 1e-12 * std::max(1.0, std::abs(x.back()));
  if (t < x.front() - tol || t > x.back() + tol)
    throw DomainError("spline coefficient evaluated outside its table range");
  std::size_t hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  hi = std::clamp<std::size_t>(hi, 1, x.size() - 1);
  const std::size_t lo = hi - 1;
  const double h = x[hi] - x[lo];
  const double a = (x[hi] - t) / h, b = (t - x[lo]) / h;
  const auto& m = s.second_derivs;
  return a * s.values[lo] + b * s.values[hi] +
         ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0;
}

cplx json_complex(const nlohmann::json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ParseError("coefficient field '" + field + "' must be a number or [re, im]");
}

double json_real(const nlohmann::json& spec, const std::string& field, double fallback,
                 bool required) {
  if (!spec.contains(field)) {
    if (required) throw ParseError("coefficient is missing field '" + field + "'");
    return fallback;
  }
  if (!spec[field].is_number()) throw ParseError("coefficient field '" + field + "' must be a number");
  return spec[field].get<double>();
}

nlohmann::json complex_json(cplx v) {
  if (v.imag() == 0.0) return v.real();
  return nlohmann::json::array({v.real(), v.imag()});
}

}  // namespace

CoefficientFn CoefficientFn::polynomial(std::vector<cplx> coeffs) {
  if (coeffs.empty()) throw ParseError("polynomial coefficient needs at least one term");
  return CoefficientFn(Polynomial{std::move(coeffs)});
}

CoefficientFn CoefficientFn::trig(cplx amplitude, double frequency, double phase, bool use_sine) {
  return CoefficientFn(Trig{amplitude, frequency, phase, use_sine});
}

CoefficientFn CoefficientFn::gaussian(cplx amplitude, double center, double width) {
  if (!(width > 0.0)) throw ParseError("gaussian width must be positive");
  return CoefficientFn(Gaussian{amplitude, center, width});
}

CoefficientFn CoefficientFn::spline(std::vector<double> t, std::vector<double> values) {
  if (t.size() < 4) throw ParseError("spline_table requires at least 4 abscissae");
  if (t.size() != values.size()) throw ParseError("spline_table abscissae and values differ in length");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1]))
      throw ParseError("spline_table abscissae must be strictly increasing (index " +
                       std::to_string(i) + ")");
  auto m = natural_spline_second_derivs(t, values);
  return CoefficientFn(SplineTable{std::move(t), std::move(values), std::move(m)});
}

CoefficientFn CoefficientFn::expression(const std::string& text) {
  expr::Parser p(text);
  return CoefficientFn(Expression{text, p.parse()});
}

CoefficientFn CoefficientFn::sum(std::vector<CoefficientFn> parts) {
  if (parts.size() == 1) return parts.front();
  return CoefficientFn(Sum{std::move(parts)});
}

cplx CoefficientFn::operator()(double t) const {
  struct Visitor {
    double t;
    cplx operator()(const Constant& c) const { return c.value; }
    cplx operator()(const Polynomial& p) const {
      cplx acc{0.0, 0.0};
      for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * t + *it;
      return acc;
    }
    cplx operator()(const Trig& g) const {
      const double arg = g.frequency * t + g.phase;
      return g.amplitude * (g.use_sine ? std::sin(arg) : std::cos(arg));
    }
    cplx operator()(const Gaussian& g) const {
      const double u = (t - g.center) / g.width;
      return g.amplitude * std::exp(-0.5 * u * u);
    }
    cplx operator()(const SplineTable& s) const { return {eval_spline(s, t), 0.0}; }
    cplx operator()(const Expression& e) const { return {expr::eval(*e.root, t), 0.0}; }
    cplx operator()(const Sum& s) const {
      cplx acc{0.0, 0.0};
      for (const auto& part : s.parts) acc += part(t);
      return acc;
    }
  };
  return std::visit(Visitor{t}, v_);
}

std::string CoefficientFn::tag() const {
  static const char* names[] = {"constant", "polynomial", "trig", "gaussian",
                                "spline_table", "expression", "sum"};
  return names[v_.index()];
}

nlohmann::json CoefficientFn::to_json() const {
  using nlohmann::json;
  struct Visitor {
    json operator()(const Constant& c) const { return {{"type", "constant"}, {"value", complex_json(c.value)}}; }
    json operator()(const Polynomial& p) const {
      json arr = json::array();
      for (const auto& c : p.coeffs) arr.push_back(complex_json(c));
      return {{"type", "polynomial"}, {"coeffs", arr}};
    }
    json operator()(const Trig& g) const {
      return {{"type", "trig"}, {"amplitude", complex_json(g.amplitude)}, {"frequency", g.frequency},
              {"phase", g.phase}, {"function", g.use_sine ? "sin" : "cos"}};
    }
    json operator()(const Gaussian& g) const {
      return {{"type", "gaussian"}, {"amplitude", complex_json(g.amplitude)}, {"center", g.center},
              {"width", g.width}};
    }
    json operator()(const SplineTable& s) const {
      return {{"type", "spline_table"}, {"t", s.t}, {"values", s.values}};
    }
    json operator()(const Expression& e) const { return {{"type", "expression"}, {"text", e.text}}; }
    json operator()(const Sum& s) const {
      json arr = json::array();
      for (const auto& p : s.parts) arr.push_back(p.to_json());
      return {{"type", "sum"}, {"parts", arr}};
    }
  };
  return std::visit(Visitor{}, v_);
}

CoefficientFn parse_coefficient(const nlohmann::json& spec) {
  if (spec.is_number() || (spec.is_array() && spec.size() == 2))
    return CoefficientFn::constant(json_complex(spec, "value"));
  if (spec.is_string()) return CoefficientFn::expression(spec.get<std::string>());
  if (!spec.is_object()) throw ParseError("coefficient must be an object, number or expression string");
  if (!spec.contains("type") || !spec["type"].is_string())
    throw ParseError("coefficient is missing string field 'type'");
  const std::string type = spec["type"].get<std::string>();

  if (type == "constant") {
    if (!spec.contains("value")) throw ParseError("coefficient is missing field 'value'");
    return CoefficientFn::constant(json_complex(spec["value"], "value"));
  }
  if (type == "polynomial") {
    if (!spec.contains("coeffs") || !spec["coeffs"].is_array())
      throw ParseError("coefficient is missing array field 'coeffs'");
    std::vector<cplx> c;
    for (const auto& v : spec["coeffs"]) c.push_back(json_complex(v, "coeffs"));
    return CoefficientFn::polynomial(std::move(c));
  }
  if (type == "trig") {
    const cplx amp = spec.contains("amplitude") ? json_complex(spec["amplitude"], "amplitude") : cplx{1.0, 0.0};
    const std::string fn = spec.value("function", std::string("cos"));
    if (fn != "cos" && fn != "sin") throw ParseError("trig 'function' must be cos or sin");
    return CoefficientFn::trig(amp, json_real(spec, "frequency", 1.0, true),
                               json_real(spec, "phase", 0.0, false), fn == "sin");
  }
  if (type == "gaussian") {
    const cplx amp = spec.contains("amplitude") ? json_complex(spec["amplitude"], "amplitude") : cplx{1.0, 0.0};
    return CoefficientFn::gaussian(amp, json_real(spec, "center", 0.0, true),
                                   json_real(spec, "width", 1.0, true));
  }
  if (type == "spline_table") {
    if (!spec.contains("t") || !spec.contains("values"))
      throw ParseError("spline_table needs fields 't' and 'values'");
    return CoefficientFn::spline(spec["t"].get<std::vector<double>>(),
                                 spec["values"].get<std::vector<double>>());
  }
  if (type == "expression") {
    if (!spec.contains("text") || !spec["text"].is_string())
      throw ParseError("expression coefficient is missing string field 'text'");
    return CoefficientFn::expression(spec["text"].get<std::string>());
  }
  if (type == "sum") {
    std::vector<CoefficientFn> parts;
    for (const auto& p : spec.at("parts")) parts.push_back(parse_coefficient(p));
    return CoefficientFn::sum(std::move(parts));
  }
  throw ParseError("unknown coefficient type '" + type + "'");
}

}  // namespace chronospec
