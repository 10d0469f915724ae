#include "stablehh/mps.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <sstream>
#include <vector>

#include "stablehh/errors.hpp"

namespace stablehh::lp {

namespace {

std::string row_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%07zu", i + 1);
  return buf;
}

std::string col_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "C%07zu", j + 1);
  return buf;
}

// Lays out one data line: field 1 in columns 2-3, field 2 in 5-12, field 3
// in 15-22, field 4 in 25-36, field 5 in 40-47, field 6 in 50-61.
std::string line(std::string_view f1, std::string_view f2, std::string_view f3 = {}, std::string_view f4 = {},
                 std::string_view f5 = {}, std::string_view f6 = {}) {
  static constexpr std::size_t kStart[] = {1, 4, 14, 24, 39, 49};
  std::string_view fields[] = {f1, f2, f3, f4, f5, f6};
  std::string out;
  for (int k = 0; k < 6; ++k) {
    if (fields[k].empty()) continue;
    if (out.size() < kStart[k]) out.resize(kStart[k], ' ');
    out.append(fields[k]);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

std::string format_mps_number(double value) {
  if (!std::isfinite(value)) throw InvalidInput("MPS field cannot hold a non-finite number");
  if (value == 0.0) return "0";
  char buf[40];
  for (int precision = 12; precision >= 1; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strlen(buf) <= 12) return buf;
  }
  throw InvalidInput("number does not fit an MPS field");
}

void write_mps(const LinearProgram& lp, std::ostream& out, std::string_view name) {
  lp.validate();
  const bool negate = lp.objective().direction == Direction::Maximize;
  const std::size_t n = lp.num_variables();

  std::vector<double> cost(n, 0.0);
  for (const Term& t : lp.objective().terms) cost[t.var.index] = negate ? -t.coef : t.coef;
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(n);
  for (std::size_t i = 0; i < lp.num_constraints(); ++i)
    for (const Term& t : lp.constraints()[i].terms) columns[t.var.index].push_back({i, t.coef});

  out << "NAME          " << name << '\n';
  if (negate) out << "* objective negated: original problem is a maximization\n";
  out << "ROWS\n" << line("N", "OBJ") << '\n';
  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    const char* kind = "E";
    switch (lp.constraints()[i].sense) {
      case Sense::LessEqual: kind = "L"; break;
      case Sense::GreaterEqual: kind = "G"; break;
      case Sense::Equal: kind = "E"; break;
    }
    out << line(kind, row_name(i)) << '\n';
  }

  out << "COLUMNS\n";
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::pair<std::string, double>> entries;
    if (cost[j] != 0.0) entries.push_back({"OBJ", cost[j]});
    for (const auto& [i, a] : columns[j]) entries.push_back({row_name(i), a});
    // A column without entries still has to be declared.
    if (entries.empty()) entries.push_back({"OBJ", 0.0});
    const std::string col = col_name(j);
    for (std::size_t e = 0; e < entries.size(); e += 2) {
      if (e + 1 < entries.size()) {
        out << line("", col, entries[e].first, format_mps_number(entries[e].second), entries[e + 1].first,
                    format_mps_number(entries[e + 1].second))
            << '\n';
      } else {
        out << line("", col, entries[e].first, format_mps_number(entries[e].second)) << '\n';
      }
    }
  }

  out << "RHS\n";
  std::vector<std::pair<std::string, double>> rhs;
  for (std::size_t i = 0; i < lp.num_constraints(); ++i)
    if (lp.constraints()[i].rhs != 0.0) rhs.push_back({row_name(i), lp.constraints()[i].rhs});
  for (std::size_t e = 0; e < rhs.size(); e += 2) {
    if (e + 1 < rhs.size()) {
      out << line("", "RHS", rhs[e].first, format_mps_number(rhs[e].second), rhs[e + 1].first,
                  format_mps_number(rhs[e + 1].second))
          << '\n';
    } else {
      out << line("", "RHS", rhs[e].first, format_mps_number(rhs[e].second)) << '\n';
    }
  }

  out << "BOUNDS\n";
  for (std::size_t j = 0; j < n; ++j) {
    const Variable& v = lp.variables()[j];
    const std::string col = col_name(j);
    if (v.lower == v.upper) {
      out << line("FX", "BND", col, format_mps_number(v.lower)) << '\n';
      continue;
    }
    if (v.lower == -kInf && v.upper == kInf) {
      out << line("FR", "BND", col) << '\n';
      continue;
    }
    if (v.lower == -kInf) out << line("MI", "BND", col) << '\n';
    else if (v.lower != 0.0) out << line("LO", "BND", col, format_mps_number(v.lower)) << '\n';
    if (v.upper != kInf) out << line("UP", "BND", col, format_mps_number(v.upper)) << '\n';
  }
  out << "ENDATA\n";
}

std::string to_mps(const LinearProgram& lp, std::string_view name) {
  std::ostringstream out;
  write_mps(lp, out, name);
  return out.str();
}

}  // namespace stablehh::lp
