#include "igbd/milp/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "igbd/util/format.hpp"

namespace igbd::milp {

int LinearProgram::add_variable(double lo, double hi, double cost) {
  objective.push_back(cost);
  bounds.push_back({lo, hi});
  return num_vars() - 1;
}

int LinearProgram::add_row(std::vector<Entry> entries, RowSense sense, double rhs) {
  rows.push_back({std::move(entries), sense, rhs});
  return num_rows() - 1;
}

void LinearProgram::validate() const {
  if (bounds.size() != objective.size()) {
    throw std::invalid_argument("objective and bounds differ in length");
  }
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    const auto& b = bounds[j];
    if (std::isnan(b.lo) || std::isnan(b.hi) || b.lo > b.hi) {
      throw std::invalid_argument("invalid bounds on variable " + std::to_string(j));
    }
    if (!std::isfinite(objective[j])) {
      throw std::invalid_argument("non-finite cost on variable " + std::to_string(j));
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i].entries) {
      if (e.col < 0 || e.col >= num_vars()) {
        throw std::invalid_argument("row " + std::to_string(i) +
                                    " references invalid column " + std::to_string(e.col));
      }
      if (!std::isfinite(e.value)) {
        throw std::invalid_argument("non-finite coefficient in row " + std::to_string(i));
      }
    }
    if (!std::isfinite(rows[i].rhs)) {
      throw std::invalid_argument("non-finite rhs in row " + std::to_string(i));
    }
  }
}

double LinearProgram::evaluate_objective(const std::vector<double>& x) const {
  double v = 0.0;
  for (int j = 0; j < num_vars(); ++j) v += objective[j] * x[j];
  return v;
}

double LinearProgram::row_activity(int row, const std::vector<double>& x) const {
  double a = 0.0;
  for (const auto& e : rows[row].entries) a += e.value * x[e.col];
  return a;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max({worst, bounds[j].lo - x[j], x[j] - bounds[j].hi});
  }
  for (int i = 0; i < num_rows(); ++i) {
    const double a = row_activity(i, x);
    const double rhs = rows[i].rhs;
    switch (rows[i].sense) {
      case RowSense::kLessEqual: worst = std::max(worst, a - rhs); break;
      case RowSense::kGreaterEqual: worst = std::max(worst, rhs - a); break;
      case RowSense::kEqual: worst = std::max(worst, std::abs(a - rhs)); break;
    }
  }
  return worst;
}

int MilpModel::add_variable(double lo, double hi, double cost, IntegerKind k) {
  kind.push_back(k);
  return lp.add_variable(lo, hi, cost);
}

int MilpModel::num_integer() const {
  return static_cast<int>(std::count_if(kind.begin(), kind.end(), [](IntegerKind k) {
    return k != IntegerKind::kContinuous;
  }));
}

void MilpModel::validate() const {
  lp.validate();
  if (kind.size() != lp.objective.size()) {
    throw std::invalid_argument("integrality mask length differs from num_vars");
  }
  for (std::size_t j = 0; j < kind.size(); ++j) {
    if (kind[j] == IntegerKind::kBinary &&
        (lp.bounds[j].lo < 0.0 || lp.bounds[j].hi > 1.0)) {
      throw std::invalid_argument("binary variable " + std::to_string(j) +
                                  " has bounds outside [0,1]");
    }
  }
}

MilpModel MilpModel::from_lp(LinearProgram lp) {
  MilpModel m;
  m.kind.assign(lp.objective.size(), IntegerKind::kContinuous);
  m.lp = std::move(lp);
  return m;
}

std::string to_string(RowSense s) {
  switch (s) {
    case RowSense::kLessEqual: return "<=";
    case RowSense::kEqual: return "=";
    case RowSense::kGreaterEqual: return ">=";
  }
  return "?";
}

RowSense row_sense_from_string(const std::string& s) {
  if (s == "<=") return RowSense::kLessEqual;
  if (s == "=") return RowSense::kEqual;
  if (s == ">=") return RowSense::kGreaterEqual;
  throw std::invalid_argument("unknown row sense: " + s);
}

nlohmann::json to_json(const MilpModel& model) {
  nlohmann::json j;
  j["schema"] = "igbd.milp.v1";
  j["num_vars"] = model.lp.num_vars();
  j["objective"] = model.lp.objective;
  auto bounds = nlohmann::json::array();
  for (const auto& b : model.lp.bounds) {
    bounds.push_back({json_number(b.lo), json_number(b.hi)});
  }
  j["bounds"] = bounds;
  auto triplets = nlohmann::json::array();
  auto senses = nlohmann::json::array();
  auto rhs = nlohmann::json::array();
  for (int i = 0; i < model.lp.num_rows(); ++i) {
    for (const auto& e : model.lp.rows[i].entries) triplets.push_back({i, e.col, e.value});
    senses.push_back(to_string(model.lp.rows[i].sense));
    rhs.push_back(model.lp.rows[i].rhs);
  }
  j["num_rows"] = model.lp.num_rows();
  j["triplets"] = triplets;
  j["senses"] = senses;
  j["rhs"] = rhs;
  auto kinds = nlohmann::json::array();
  for (auto k : model.kind) {
    kinds.push_back(k == IntegerKind::kBinary    ? "B"
                    : k == IntegerKind::kInteger ? "I"
                                                 : "C");
  }
  j["integrality"] = kinds;
  return j;
}

MilpModel milp_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.milp.v1") {
    throw std::invalid_argument("expected schema igbd.milp.v1");
  }
  MilpModel m;
  const int n = j.at("num_vars").get<int>();
  m.lp.objective = j.at("objective").get<std::vector<double>>();
  for (const auto& b : j.at("bounds")) {
    m.lp.bounds.push_back({json_to_double(b.at(0)), json_to_double(b.at(1))});
  }
  const int rows = j.at("num_rows").get<int>();
  m.lp.rows.resize(rows);
  const auto& senses = j.at("senses");
  const auto& rhs = j.at("rhs");
  for (int i = 0; i < rows; ++i) {
    m.lp.rows[i].sense = row_sense_from_string(senses.at(i).get<std::string>());
    m.lp.rows[i].rhs = rhs.at(i).get<double>();
  }
  for (const auto& t : j.at("triplets")) {
    const int r = t.at(0).get<int>();
    if (r < 0 || r >= rows) throw std::invalid_argument("triplet row out of range");
    m.lp.rows[r].entries.push_back({t.at(1).get<int>(), t.at(2).get<double>()});
  }
  for (const auto& k : j.at("integrality")) {
    const auto s = k.get<std::string>();
    m.kind.push_back(s == "B" ? IntegerKind::kBinary
                     : s == "I" ? IntegerKind::kInteger
                                : IntegerKind::kContinuous);
  }
  if (static_cast<int>(m.lp.objective.size()) != n) {
    throw std::invalid_argument("objective length differs from num_vars");
  }
  m.validate();
  return m;
}

}  // namespace igbd::milp
