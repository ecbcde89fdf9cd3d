#include "igbd/gbd/trace.hpp"

#include <sstream>
#include <stdexcept>

#include "igbd/util/format.hpp"

namespace igbd::gbd {

namespace {

const char* kCsvHeader =
    "l,tol,realized,master_value,master_bound,ub,tlb,gap,master_cpu,max_subproblem_cpu,"
    "master_nodes,master_pivots,master_status,cuts_added";

nlohmann::json record_json(const IterationRecord& r) {
  return {{"l", r.l},
          {"tol", json_number(r.tol)},
          {"realized", json_number(r.realized)},
          {"master_value", json_number(r.master_value)},
          {"master_bound", json_number(r.master_bound)},
          {"ub", json_number(r.ub)},
          {"tlb", json_number(r.tlb)},
          {"gap", json_number(r.gap)},
          {"master_cpu", r.master_cpu},
          {"max_subproblem_cpu", r.max_subproblem_cpu},
          {"master_nodes", r.master_nodes},
          {"master_pivots", r.master_pivots},
          {"master_status", r.master_status},
          {"cuts_added", r.cuts_added}};
}

IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.l = j.at("l").get<int>();
  r.tol = json_to_double(j.at("tol"));
  r.realized = json_to_double(j.at("realized"));
  r.master_value = json_to_double(j.at("master_value"));
  r.master_bound = json_to_double(j.at("master_bound"));
  r.ub = json_to_double(j.at("ub"));
  r.tlb = json_to_double(j.at("tlb"));
  r.gap = json_to_double(j.at("gap"));
  r.master_cpu = j.at("master_cpu").get<double>();
  r.max_subproblem_cpu = j.at("max_subproblem_cpu").get<double>();
  r.master_nodes = j.at("master_nodes").get<long>();
  r.master_pivots = j.at("master_pivots").get<long>();
  r.master_status = j.at("master_status").get<std::string>();
  r.cuts_added = j.at("cuts_added").get<int>();
  return r;
}

}  // namespace

long SolveTrace::total_pivots() const {
  long n = 0;
  for (const auto& r : records) n += r.master_pivots;
  return n;
}

long SolveTrace::total_nodes() const {
  long n = 0;
  for (const auto& r : records) n += r.master_nodes;
  return n;
}

std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& r : trace.records) {
    out << join_csv({std::to_string(r.l), format_double(r.tol), format_double(r.realized),
                     format_double(r.master_value), format_double(r.master_bound), format_double(r.ub),
                     format_double(r.tlb), format_double(r.gap), format_double(r.master_cpu),
                     format_double(r.max_subproblem_cpu), std::to_string(r.master_nodes),
                     std::to_string(r.master_pivots), r.master_status, std::to_string(r.cuts_added)})
        << "\n";
  }
  return out.str();
}

std::vector<IterationRecord> records_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || join_csv(rows[0]) != kCsvHeader) {
    throw std::invalid_argument("not a trace CSV");
  }
  std::vector<IterationRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 14) throw std::invalid_argument("trace CSV row has wrong field count");
    IterationRecord r;
    r.l = std::stoi(f[0]);
    r.tol = std::stod(f[1]);
    r.realized = std::stod(f[2]);
    r.master_value = std::stod(f[3]);
    r.master_bound = std::stod(f[4]);
    r.ub = std::stod(f[5]);
    r.tlb = std::stod(f[6]);
    r.gap = std::stod(f[7]);
    r.master_cpu = std::stod(f[8]);
    r.max_subproblem_cpu = std::stod(f[9]);
    r.master_nodes = std::stol(f[10]);
    r.master_pivots = std::stol(f[11]);
    r.master_status = f[12];
    r.cuts_added = std::stoi(f[13]);
    out.push_back(r);
  }
  return out;
}

nlohmann::json to_json(const SolveTrace& t) {
  nlohmann::json j;
  j["schema"] = "igbd.trace.v1";
  j["instance_id"] = t.instance_id;
  j["policy"] = t.policy;
  j["converged"] = t.converged;
  j["truncated"] = t.truncated;
  j["infeasible"] = t.infeasible;
  j["diagnostic"] = t.diagnostic;
  j["final_objective"] = json_number(t.final_objective);
  j["final_x"] = t.final_x;
  j["t_mp"] = t.t_mp;
  j["t_total"] = t.t_total;
  j["records"] = nlohmann::json::array();
  for (const auto& r : t.records) j["records"].push_back(record_json(r));
  return j;
}

SolveTrace trace_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.trace.v1") throw std::invalid_argument("not an igbd.trace.v1 document");
  SolveTrace t;
  t.instance_id = j.at("instance_id").get<std::string>();
  t.policy = j.at("policy").get<std::string>();
  t.converged = j.at("converged").get<bool>();
  t.truncated = j.at("truncated").get<bool>();
  t.infeasible = j.at("infeasible").get<bool>();
  t.diagnostic = j.at("diagnostic").get<std::string>();
  t.final_objective = json_to_double(j.at("final_objective"));
  t.final_x = j.at("final_x").get<std::vector<double>>();
  t.t_mp = j.at("t_mp").get<double>();
  t.t_total = j.at("t_total").get<double>();
  for (const auto& r : j.at("records")) t.records.push_back(record_from_json(r));
  return t;
}

std::string deterministic_fingerprint(const SolveTrace& t) {
  std::ostringstream out;
  out << t.instance_id << "|" << t.policy << "|" << t.converged << t.truncated << t.infeasible << "|"
      << format_double(t.final_objective) << "\n";
  for (double v : t.final_x) out << format_double(v) << ",";
  out << "\n";
  for (const auto& r : t.records) {
    out << join_csv({std::to_string(r.l), format_double(r.tol), format_double(r.realized),
                     format_double(r.master_value), format_double(r.master_bound), format_double(r.ub),
                     format_double(r.tlb), format_double(r.gap), std::to_string(r.master_nodes),
                     std::to_string(r.master_pivots), r.master_status, std::to_string(r.cuts_added)})
        << "\n";
  }
  return out.str();
}

}  // namespace igbd::gbd
