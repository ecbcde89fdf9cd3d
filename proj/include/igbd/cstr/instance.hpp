#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "igbd/nlp/transition.hpp"

namespace igbd::cstr {

struct Product {
  std::string name;
  double price = 0.0;    // $/mol
  double op_cost = 0.0;  // $/mol
  double rate = 0.0;     // mol/h
  double c_ss = 0.0;     // mol/L
  double d_nom = 0.0;    // mol
  double inv0 = 0.0;     // mol
};

// Economics and cached minimum transition times of one case. Stored as
// JSON under data/tables/np<N>.json (schema "igbd.product_table.v1").
struct ProductTable {
  std::string name;
  nlp::ReactorParams reactor;
  nlp::TransitionBounds bounds;
  int n_fe = 30;
  // Sampling range of the intermediate concentration c0.
  double c0_lo = 0.8;
  double c0_hi = 1.2;
  std::vector<Product> products;
  // [i][j], $ per transition.
  std::vector<std::vector<double>> transition_cost;
  // [i][j] and [i], h. The intermediate-state times are taken at c0_hi, the
  // slowest start in the sampling range, so they hold for every sample.
  std::vector<std::vector<double>> theta_min;
  std::vector<double> theta_hat_min;

  int size() const { return static_cast<int>(products.size()); }
  double steady_flow(int i) const;
  bool has_min_times() const;
  // Throws std::invalid_argument on inconsistent dimensions or values.
  void validate() const;
};

nlohmann::json to_json(const ProductTable& table);
ProductTable product_table_from_json(const nlohmann::json& j);

// Directory holding tables/; IGBD_DATA_DIR overrides the build-time default.
std::string default_data_dir();
std::string table_path(int n_products, const std::string& data_dir);
ProductTable load_product_table(int n_products, const std::string& data_dir = default_data_dir());

nlp::TransitionSpec transition_spec(const ProductTable& table, int from, int to, double alpha_u);
nlp::TransitionSpec intermediate_spec(const ProductTable& table, double c0, int to, double alpha_u);

// Fills theta_min and theta_hat_min with nlp::min_transition_time.
void compute_min_times(ProductTable& table, const nlp::MinTimeOptions& options = {});

struct InstanceParams {
  int n_products = 0;
  double c0 = 1.0;
  std::vector<double> demands;
  double horizon = 168.0;
  double c_inv = 0.5;
  double alpha_u = 0.5;
  // Upper bound on every transition time, h.
  double theta_max = 24.0;
  std::uint64_t seed = 0;
  ProductTable table;

  std::string id() const;
  void validate() const;
  // c0 and demands scaled to [0, 1] by their sampling ranges.
  std::vector<double> features() const;
};

// Midpoint of every sampling range.
InstanceParams nominal_instance(const ProductTable& table);

// Sum of d_i / r_i plus the smallest total minimum transition time over
// all sequences, which must not exceed H.
double screen_time(const InstanceParams& params);
bool passes_feasibility_screen(const InstanceParams& params);

// c0 ~ U(c0_lo, c0_hi), d_i ~ U(0.9, 1.1) * d_nom, resampled until the
// screen passes. Throws std::runtime_error after 100 rejected draws.
InstanceParams sample_instance(const ProductTable& table, std::uint64_t seed);

// Schema "igbd.instance.v1"; the table is referenced by size and loaded
// from data_dir.
nlohmann::json to_json(const InstanceParams& params);
InstanceParams instance_from_json(const nlohmann::json& j, const std::string& data_dir = default_data_dir());

}  // namespace igbd::cstr
