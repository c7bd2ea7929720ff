#include "stratbid/mps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace stratbid::solver {

namespace {

std::string id(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07d", prefix, i + 1);
  return buf;
}

// Places up to six fields at the fixed-format start columns.
std::string line(const std::string& f1, const std::string& f2, const std::string& f3 = "", const std::string& f4 = "",
                 const std::string& f5 = "", const std::string& f6 = "") {
  static constexpr std::size_t start[6] = {1, 4, 14, 24, 39, 49};
  const std::string* f[6] = {&f1, &f2, &f3, &f4, &f5, &f6};
  std::string out;
  for (int k = 0; k < 6; ++k) {
    if (f[k]->empty()) continue;
    if (out.size() < start[k]) out.resize(start[k], ' ');
    out += *f[k];
  }
  return out + "\n";
}

}  // namespace

std::string mps_number(double v) {
  if (!std::isfinite(v)) throw MpsError("cannot write a non-finite number to MPS");
  if (v == 0.0) return "0";
  char buf[64];
  if (v == std::trunc(v) && std::abs(v) < 1e11) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  std::string fallback;
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    const std::string s = buf;
    if (s.size() > 12) break;
    fallback = s;
    if (std::strtod(buf, nullptr) == v) return s;
  }
  if (fallback.empty()) throw MpsError("number does not fit the 12-character MPS field");
  return fallback;
}

std::string to_mps(const MilpProblem& p, const std::string& name) {
  p.validate();
  const auto& lp = p.lp;
  std::ostringstream out;
  out << "NAME          " << name << "\n";
  if (lp.sense == ObjectiveSense::kMaximize) out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n" << line("N", "COST");
  for (int i = 0; i < lp.num_rows(); ++i) {
    const char* s = lp.rows[i].sense == RowSense::kLessEqual ? "L" : lp.rows[i].sense == RowSense::kGreaterEqual ? "G" : "E";
    out << line(s, id('R', i));
  }

  std::vector<std::map<int, double>> cols(lp.num_columns());
  for (const auto& e : lp.coefficients) cols[e.col][e.row] += e.value;

  out << "COLUMNS\n";
  bool in_int = false;
  int markers = 0;
  for (int j = 0; j < lp.num_columns(); ++j) {
    const bool is_int = p.is_integer[j] != 0;
    if (is_int != in_int) {
      out << line("", id('M', markers++), "'MARKER'", "", is_int ? "'INTORG'" : "'INTEND'");
      in_int = is_int;
    }
    const std::string c = id('C', j);
    bool any = false;
    if (lp.columns[j].cost != 0.0) {
      out << line("", c, "COST", mps_number(lp.columns[j].cost));
      any = true;
    }
    for (const auto& [r, v] : cols[j]) {
      if (v == 0.0) continue;
      out << line("", c, id('R', r), mps_number(v));
      any = true;
    }
    if (!any) out << line("", c, "COST", "0");
  }
  if (in_int) out << line("", id('M', markers++), "'MARKER'", "", "'INTEND'");

  out << "RHS\n";
  if (lp.objective_offset != 0.0) out << line("", "RHS", "COST", mps_number(-lp.objective_offset));
  for (int i = 0; i < lp.num_rows(); ++i)
    if (lp.rows[i].rhs != 0.0) out << line("", "RHS", id('R', i), mps_number(lp.rows[i].rhs));

  out << "BOUNDS\n";
  for (int j = 0; j < lp.num_columns(); ++j) {
    const auto& c = lp.columns[j];
    const std::string n = id('C', j);
    const bool lo_inf = !std::isfinite(c.lower), up_inf = !std::isfinite(c.upper);
    if (p.is_integer[j] && c.lower == 0.0 && c.upper == 1.0) {
      out << line("BV", "BND", n);
    } else if (lo_inf && up_inf) {
      out << line("FR", "BND", n);
    } else if (!lo_inf && !up_inf && c.lower == c.upper) {
      out << line("FX", "BND", n, mps_number(c.lower));
    } else {
      if (lo_inf) out << line("MI", "BND", n);
      else if (c.lower != 0.0) out << line("LO", "BND", n, mps_number(c.lower));
      if (!up_inf) out << line("UP", "BND", n, mps_number(c.upper));
    }
  }
  out << "ENDATA\n";
  return out.str();
}

void export_mps(const MilpProblem& p, const std::filesystem::path& path, const std::string& name) {
  const auto text = to_mps(p, name);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MpsError("cannot write " + path.string());
  f << text;
  if (!f) throw MpsError("write failed for " + path.string());
}

MilpProblem parse_mps(const std::string& text) {
  MilpProblem p;
  auto& lp = p.lp;
  std::unordered_map<std::string, int> row_index, col_index;
  std::string objective_row;
  enum class Section { kNone, kName, kObjSense, kRows, kColumns, kRhs, kBounds, kEnd } sec = Section::kNone;
  bool in_int = false;
  bool ended = false;
  std::vector<char> bounded_integer;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> MpsError {
    return MpsError("MPS line " + std::to_string(line_no) + ": " + msg);
  };
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw fail("'" + s + "' is not a number");
    return v;
  };
  auto column = [&](const std::string& n) {
    auto it = col_index.find(n);
    if (it == col_index.end()) throw fail("unknown column " + n);
    return it->second;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (ended) throw fail("data after ENDATA");

    if (raw[0] != ' ' && raw[0] != '\t') {
      const auto& h = tok[0];
      if (h == "NAME") sec = Section::kName;
      else if (h == "OBJSENSE") {
        sec = Section::kObjSense;
        if (tok.size() > 1) {
          if (tok[1] == "MAX" || tok[1] == "MAXIMIZE") lp.sense = ObjectiveSense::kMaximize;
          else if (tok[1] != "MIN" && tok[1] != "MINIMIZE") throw fail("unknown objective sense " + tok[1]);
        }
      } else if (h == "ROWS") sec = Section::kRows;
      else if (h == "COLUMNS") sec = Section::kColumns;
      else if (h == "RHS") sec = Section::kRhs;
      else if (h == "BOUNDS") sec = Section::kBounds;
      else if (h == "RANGES") throw fail("RANGES section is not supported");
      else if (h == "ENDATA") {
        ended = true;
        sec = Section::kEnd;
      } else throw fail("unknown section " + h);
      continue;
    }

    switch (sec) {
      case Section::kObjSense:
        if (tok[0] == "MAX" || tok[0] == "MAXIMIZE") lp.sense = ObjectiveSense::kMaximize;
        else if (tok[0] == "MIN" || tok[0] == "MINIMIZE") lp.sense = ObjectiveSense::kMinimize;
        else throw fail("unknown objective sense " + tok[0]);
        break;
      case Section::kRows: {
        if (tok.size() != 2) throw fail("ROWS entry needs a type and a name");
        const auto& t = tok[0];
        if (t == "N") {
          if (objective_row.empty()) objective_row = tok[1];
          break;
        }
        RowSense s;
        if (t == "L") s = RowSense::kLessEqual;
        else if (t == "G") s = RowSense::kGreaterEqual;
        else if (t == "E") s = RowSense::kEqual;
        else throw fail("unknown row type " + t);
        if (row_index.count(tok[1])) throw fail("duplicate row " + tok[1]);
        row_index[tok[1]] = lp.add_row(tok[1], s, 0.0);
        break;
      }
      case Section::kColumns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") in_int = true;
          else if (tok[2] == "'INTEND'") in_int = false;
          else throw fail("unknown marker " + tok[2]);
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) throw fail("COLUMNS entry needs 3 or 5 fields");
        int c;
        auto it = col_index.find(tok[0]);
        if (it == col_index.end()) {
          c = lp.add_column(tok[0], 0.0, 0.0, kInf);
          col_index[tok[0]] = c;
          p.is_integer.push_back(in_int ? 1 : 0);
          bounded_integer.push_back(0);
        } else {
          c = it->second;
          if (c != lp.num_columns() - 1) throw fail("column " + tok[0] + " is not contiguous");
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = number(tok[k + 1]);
          if (tok[k] == objective_row) lp.columns[c].cost += v;
          else {
            auto r = row_index.find(tok[k]);
            if (r == row_index.end()) throw fail("unknown row " + tok[k]);
            if (v != 0.0) lp.add_coefficient(r->second, c, v);
          }
        }
        break;
      }
      case Section::kRhs: {
        const std::size_t first = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < 2) throw fail("RHS entry is too short");
        for (std::size_t k = first; k + 1 < tok.size(); k += 2) {
          const double v = number(tok[k + 1]);
          if (tok[k] == objective_row) lp.objective_offset = -v;
          else {
            auto r = row_index.find(tok[k]);
            if (r == row_index.end()) throw fail("unknown row " + tok[k]);
            lp.rows[r->second].rhs = v;
          }
        }
        break;
      }
      case Section::kBounds: {
        if (tok.size() < 3) throw fail("BOUNDS entry is too short");
        const auto& t = tok[0];
        const int c = column(tok[2]);
        auto& col = lp.columns[c];
        const bool needs_value = t == "UP" || t == "LO" || t == "FX";
        if (needs_value && tok.size() < 4) throw fail(t + " bound needs a value");
        const double v = tok.size() >= 4 ? number(tok[3]) : 0.0;
        if (t == "UP") col.upper = v;
        else if (t == "LO") col.lower = v;
        else if (t == "FX") col.lower = col.upper = v;
        else if (t == "FR") col.lower = -kInf, col.upper = kInf;
        else if (t == "MI") col.lower = -kInf;
        else if (t == "PL") col.upper = kInf;
        else if (t == "BV") {
          col.lower = 0.0;
          col.upper = 1.0;
          p.is_integer[c] = 1;
        } else throw fail("unknown bound type " + t);
        bounded_integer[c] = 1;
        break;
      }
      case Section::kName:
      case Section::kNone:
      case Section::kEnd:
        throw fail("data outside of a section");
    }
  }
  if (!ended) throw MpsError("MPS text is truncated: missing ENDATA after line " + std::to_string(line_no));
  if (objective_row.empty()) throw MpsError("MPS text has no objective row");
  // Integers without explicit bounds are binaries.
  for (int j = 0; j < lp.num_columns(); ++j)
    if (p.is_integer[j] && !bounded_integer[j]) lp.columns[j].upper = 1.0;
  p.validate();
  return p;
}

MilpProblem import_mps(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MpsError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_mps(ss.str());
}

}  // namespace stratbid::solver
