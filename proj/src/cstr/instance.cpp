#include "igbd/cstr/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "igbd/util/format.hpp"
#include "igbd/util/random.hpp"

#ifndef IGBD_DATA_DIR
#define IGBD_DATA_DIR "data"
#endif

namespace igbd::cstr {

double ProductTable::steady_flow(int i) const { return nlp::steady_flow(reactor, products.at(i).c_ss); }

bool ProductTable::has_min_times() const {
  return static_cast<int>(theta_min.size()) == size() && static_cast<int>(theta_hat_min.size()) == size();
}

void ProductTable::validate() const {
  reactor.validate();
  const int n = size();
  if (n < 2) throw std::invalid_argument("product table needs at least two products");
  if (n_fe < 2) throw std::invalid_argument("n_fe must be at least 2");
  if (!(c0_lo > 0.0 && c0_lo <= c0_hi)) throw std::invalid_argument("bad c0 range");
  if (!(bounds.c_lo < bounds.c_hi && bounds.f_lo < bounds.f_hi)) throw std::invalid_argument("bad bounds");
  if (c0_hi > bounds.c_hi || c0_lo < bounds.c_lo) throw std::invalid_argument("c0 range outside c bounds");
  for (const auto& p : products) {
    if (!(p.rate > 0.0 && p.d_nom > 0.0 && p.inv0 >= 0.0 && p.price >= 0.0 && p.op_cost >= 0.0)) {
      throw std::invalid_argument("product " + p.name + " has invalid economics");
    }
    if (!(p.c_ss > bounds.c_lo && p.c_ss < std::min(bounds.c_hi, reactor.c_f))) {
      throw std::invalid_argument("product " + p.name + " steady state outside bounds");
    }
    const double f = nlp::steady_flow(reactor, p.c_ss);
    if (f < bounds.f_lo || f > bounds.f_hi) {
      throw std::invalid_argument("product " + p.name + " steady flow outside bounds");
    }
  }
  if (static_cast<int>(transition_cost.size()) != n) throw std::invalid_argument("transition_cost size");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(transition_cost[i].size()) != n) throw std::invalid_argument("transition_cost size");
    if (transition_cost[i][i] != 0.0) throw std::invalid_argument("transition_cost diagonal must be 0");
  }
  if (!theta_min.empty() || !theta_hat_min.empty()) {
    if (!has_min_times()) throw std::invalid_argument("minimum time tables have wrong size");
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(theta_min[i].size()) != n) throw std::invalid_argument("theta_min size");
      if (theta_min[i][i] != 0.0) throw std::invalid_argument("theta_min diagonal must be 0");
      if (theta_hat_min[i] < 0.0) throw std::invalid_argument("theta_hat_min negative");
      for (double t : theta_min[i]) {
        if (t < 0.0) throw std::invalid_argument("theta_min negative");
      }
    }
  }
}

nlohmann::json to_json(const ProductTable& t) {
  nlohmann::json j;
  j["schema"] = "igbd.product_table.v1";
  j["name"] = t.name;
  j["reactor"] = {{"c_f", t.reactor.c_f}, {"volume", t.reactor.volume}, {"k_rate", t.reactor.k_rate}};
  j["bounds"] = {{"c_lo", t.bounds.c_lo}, {"c_hi", t.bounds.c_hi}, {"f_lo", t.bounds.f_lo}, {"f_hi", t.bounds.f_hi}};
  j["n_fe"] = t.n_fe;
  j["c0_range"] = {t.c0_lo, t.c0_hi};
  j["products"] = nlohmann::json::array();
  for (const auto& p : t.products) {
    j["products"].push_back({{"name", p.name},
                             {"price", p.price},
                             {"op_cost", p.op_cost},
                             {"rate", p.rate},
                             {"c_ss", p.c_ss},
                             {"d_nom", p.d_nom},
                             {"inv0", p.inv0}});
  }
  j["transition_cost"] = t.transition_cost;
  if (t.has_min_times()) {
    j["theta_min"] = t.theta_min;
    j["theta_hat_min"] = t.theta_hat_min;
  }
  return j;
}

ProductTable product_table_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.product_table.v1") {
    throw std::invalid_argument("not an igbd.product_table.v1 document");
  }
  ProductTable t;
  t.name = j.at("name").get<std::string>();
  const auto& r = j.at("reactor");
  t.reactor = {r.at("c_f").get<double>(), r.at("volume").get<double>(), r.at("k_rate").get<double>()};
  const auto& b = j.at("bounds");
  t.bounds = {b.at("c_lo").get<double>(), b.at("c_hi").get<double>(), b.at("f_lo").get<double>(),
              b.at("f_hi").get<double>()};
  t.n_fe = j.at("n_fe").get<int>();
  t.c0_lo = j.at("c0_range").at(0).get<double>();
  t.c0_hi = j.at("c0_range").at(1).get<double>();
  for (const auto& p : j.at("products")) {
    t.products.push_back({p.at("name").get<std::string>(), p.at("price").get<double>(),
                          p.at("op_cost").get<double>(), p.at("rate").get<double>(), p.at("c_ss").get<double>(),
                          p.at("d_nom").get<double>(), p.at("inv0").get<double>()});
  }
  t.transition_cost = j.at("transition_cost").get<std::vector<std::vector<double>>>();
  if (j.contains("theta_min")) {
    t.theta_min = j.at("theta_min").get<std::vector<std::vector<double>>>();
    t.theta_hat_min = j.at("theta_hat_min").get<std::vector<double>>();
  }
  t.validate();
  return t;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("IGBD_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return IGBD_DATA_DIR;
}

std::string table_path(int n_products, const std::string& data_dir) {
  return data_dir + "/tables/np" + std::to_string(n_products) + ".json";
}

ProductTable load_product_table(int n_products, const std::string& data_dir) {
  const auto path = table_path(n_products, data_dir);
  ProductTable t = product_table_from_json(nlohmann::json::parse(read_file(path)));
  if (t.size() != n_products) throw std::invalid_argument(path + " does not hold " + std::to_string(n_products) + " products");
  return t;
}

nlp::TransitionSpec transition_spec(const ProductTable& table, int from, int to, double alpha_u) {
  nlp::TransitionSpec s;
  s.reactor = table.reactor;
  s.c_start = table.products.at(from).c_ss;
  s.c_end = table.products.at(to).c_ss;
  s.f_start = table.steady_flow(from);
  s.f_end = table.steady_flow(to);
  s.f_target = s.f_end;
  s.bounds = table.bounds;
  s.alpha_u = alpha_u;
  s.n_fe = table.n_fe;
  return s;
}

nlp::TransitionSpec intermediate_spec(const ProductTable& table, double c0, int to, double alpha_u) {
  nlp::TransitionSpec s = transition_spec(table, to, to, alpha_u);
  s.c_start = c0;
  s.f_start.reset();
  return s;
}

void compute_min_times(ProductTable& table, const nlp::MinTimeOptions& options) {
  const int n = table.size();
  table.theta_min.assign(n, std::vector<double>(n, 0.0));
  table.theta_hat_min.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) table.theta_min[i][j] = nlp::min_transition_time(transition_spec(table, i, j, 0.5), options);
    }
    table.theta_hat_min[i] = nlp::min_transition_time(intermediate_spec(table, table.c0_hi, i, 0.5), options);
  }
}

std::string InstanceParams::id() const {
  std::ostringstream out;
  out << table.name << "-s" << seed;
  return out.str();
}

void InstanceParams::validate() const {
  table.validate();
  if (!table.has_min_times()) throw std::invalid_argument("product table lacks minimum transition times");
  if (n_products != table.size()) throw std::invalid_argument("n_products does not match the table");
  if (static_cast<int>(demands.size()) != n_products) throw std::invalid_argument("demand count mismatch");
  if (!(c0 >= table.bounds.c_lo && c0 <= table.bounds.c_hi)) throw std::invalid_argument("c0 outside bounds");
  for (double d : demands) {
    if (!(d >= 0.0)) throw std::invalid_argument("negative demand");
  }
  if (!(horizon > 0.0 && c_inv >= 0.0 && alpha_u > 0.0)) throw std::invalid_argument("bad horizon or costs");
  for (int i = 0; i < n_products; ++i) {
    if (table.theta_hat_min[i] > theta_max) throw std::invalid_argument("theta_max below a minimum time");
    for (int j = 0; j < n_products; ++j) {
      if (table.theta_min[i][j] > theta_max) throw std::invalid_argument("theta_max below a minimum time");
    }
  }
}

std::vector<double> InstanceParams::features() const {
  std::vector<double> f;
  const double span = table.c0_hi - table.c0_lo;
  f.push_back(span > 0.0 ? (c0 - table.c0_lo) / span : 0.5);
  for (int i = 0; i < n_products; ++i) {
    const double nom = table.products[i].d_nom;
    f.push_back((demands[i] - 0.9 * nom) / (0.2 * nom));
  }
  return f;
}

InstanceParams nominal_instance(const ProductTable& table) {
  InstanceParams p;
  p.n_products = table.size();
  p.c0 = 0.5 * (table.c0_lo + table.c0_hi);
  for (const auto& prod : table.products) p.demands.push_back(prod.d_nom);
  p.table = table;
  p.validate();
  return p;
}

double screen_time(const InstanceParams& params) {
  const auto& t = params.table;
  const int n = t.size();
  double busy = 0.0;
  for (int i = 0; i < n; ++i) busy += params.demands[i] / t.products[i].rate;
  std::vector<int> seq(n);
  std::iota(seq.begin(), seq.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double tt = t.theta_hat_min[seq[0]];
    for (int k = 0; k + 1 < n; ++k) tt += t.theta_min[seq[k]][seq[k + 1]];
    best = std::min(best, tt);
  } while (std::next_permutation(seq.begin(), seq.end()));
  return busy + best;
}

bool passes_feasibility_screen(const InstanceParams& params) { return screen_time(params) <= params.horizon; }

InstanceParams sample_instance(const ProductTable& table, std::uint64_t seed) {
  InstanceParams p = nominal_instance(table);
  p.seed = seed;
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    p.c0 = rng.uniform(table.c0_lo, table.c0_hi);
    for (int i = 0; i < p.n_products; ++i) {
      const double nom = table.products[i].d_nom;
      p.demands[i] = rng.uniform(0.9 * nom, 1.1 * nom);
    }
    if (passes_feasibility_screen(p)) return p;
  }
  throw std::runtime_error("instance sampler exhausted 100 retries for table " + table.name);
}

nlohmann::json to_json(const InstanceParams& p) {
  return {{"schema", "igbd.instance.v1"},
          {"n_products", p.n_products},
          {"c0", p.c0},
          {"demands", p.demands},
          {"horizon", p.horizon},
          {"c_inv", p.c_inv},
          {"alpha_u", p.alpha_u},
          {"theta_max", p.theta_max},
          {"seed", p.seed},
          {"table", p.table.name},
          {"table_data", to_json(p.table)}};
}

InstanceParams instance_from_json(const nlohmann::json& j, const std::string& data_dir) {
  if (j.value("schema", "") != "igbd.instance.v1") throw std::invalid_argument("not an igbd.instance.v1 document");
  InstanceParams p;
  p.n_products = j.at("n_products").get<int>();
  p.c0 = j.at("c0").get<double>();
  p.demands = j.at("demands").get<std::vector<double>>();
  p.horizon = j.value("horizon", 168.0);
  p.c_inv = j.value("c_inv", 0.5);
  p.alpha_u = j.value("alpha_u", 0.5);
  p.theta_max = j.value("theta_max", 24.0);
  p.seed = j.value("seed", std::uint64_t{0});
  p.table = j.contains("table_data") ? product_table_from_json(j.at("table_data"))
                                     : load_product_table(p.n_products, data_dir);
  p.validate();
  return p;
}

}  // namespace igbd::cstr
