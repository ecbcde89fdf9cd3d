#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace igbd::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

struct Entry {
  int col = 0;
  double value = 0.0;
};

struct Row {
  std::vector<Entry> entries;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

struct VarBounds {
  double lo = 0.0;
  double hi = kInf;
};

// Minimization in canonical form: min c'x s.t. rows, lo <= x <= hi.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<VarBounds> bounds;
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(double lo, double hi, double cost);
  int add_row(std::vector<Entry> entries, RowSense sense, double rhs);

  // Throws std::invalid_argument on bad indices, inverted bounds, or
  // mismatched sizes.
  void validate() const;

  double evaluate_objective(const std::vector<double>& x) const;
  double row_activity(int row, const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;
};

enum class IntegerKind { kContinuous, kBinary, kInteger };

struct MilpModel {
  LinearProgram lp;
  std::vector<IntegerKind> kind;

  int add_variable(double lo, double hi, double cost,
                   IntegerKind k = IntegerKind::kContinuous);
  bool is_integer(int j) const { return kind[j] != IntegerKind::kContinuous; }
  int num_integer() const;

  // Also checks that binaries live inside [0, 1].
  void validate() const;

  static MilpModel from_lp(LinearProgram lp);
};

// JSON schema "igbd.milp.v1": objective, bounds, triplet-form rows,
// per-variable integrality.
nlohmann::json to_json(const MilpModel& model);
MilpModel milp_from_json(const nlohmann::json& j);

std::string to_string(RowSense s);
RowSense row_sense_from_string(const std::string& s);

}  // namespace igbd::milp
