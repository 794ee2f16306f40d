#include "lampshuffler/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace lampshuffler {

namespace {

std::int64_t parse_int(const std::string& s, const std::string& whole) {
  if (s.empty()) throw std::invalid_argument("malformed rational '" + whole + "'");
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational '" + whole + "'");
  }
  if (used != s.size()) throw std::invalid_argument("malformed rational '" + whole + "'");
  return v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const auto den = parse_int(text.substr(slash + 1), text);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return Rational(parse_int(text.substr(0, slash), text), den);
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(parse_int(text, text));
  std::string int_part = text.substr(0, dot);
  const std::string frac = text.substr(dot + 1);
  if (frac.empty() || frac.size() > 17) throw std::invalid_argument("malformed decimal '" + text + "'");
  for (char c : frac) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw std::invalid_argument("malformed decimal '" + text + "'");
  }
  const bool negative = !int_part.empty() && int_part[0] == '-';
  if (int_part.empty() || int_part == "-" || int_part == "+") int_part += "0";
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::int64_t whole = parse_int(int_part, text);
  const std::int64_t f = parse_int(frac, text);
  Rational r(whole);
  r += Rational(negative ? -f : f, den);
  return r;
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace lampshuffler
