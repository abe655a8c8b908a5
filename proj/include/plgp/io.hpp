#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plgp/errors.hpp"
#include "plgp/model.hpp"
#include "plgp/synthetic.hpp"

namespace plgp {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw shape_error("json: '" + name + "' must be a nonempty array of rows");
  const std::size_t cols = j.at(0).size();
  if (cols == 0) throw shape_error("json: '" + name + "' rows must be nonempty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw shape_error("json: '" + name + "' rows have unequal length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw shape_error("json: '" + name + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

// Dataset wire format: {"x": [[...]], "t": [...], "y": [...], "x_query": [[...]]}
inline nlohmann::json dataset_to_json(const Dataset& data, const Eigen::MatrixXd& x_query) {
  nlohmann::json j;
  j["x"] = matrix_to_json(data.x);
  j["t"] = vector_to_json(data.t);
  j["y"] = vector_to_json(data.y);
  j["x_query"] = matrix_to_json(x_query);
  return j;
}

struct DatasetWithQuery {
  Dataset data;
  Eigen::MatrixXd x_query;
};

inline DatasetWithQuery dataset_from_json(const nlohmann::json& root) {
  // accept both the bare dataset shape and a simulate() output file
  const nlohmann::json& j = root.contains("data") ? root.at("data") : root;
  DatasetWithQuery out;
  out.data.x = matrix_from_json(j.at("x"), "x");
  out.data.t = vector_from_json(j.at("t"), "t");
  out.data.y = vector_from_json(j.at("y"), "y");
  const nlohmann::json& q = root.contains("x_query") ? root.at("x_query") : j.at("x_query");
  out.x_query = matrix_from_json(q, "x_query");
  out.data.validate();
  if (out.x_query.cols() != out.data.dim())
    throw shape_error("json: 'x_query' dimension does not match 'x'");
  return out;
}

inline nlohmann::json sim_output_to_json(const SimOutput& sim) {
  nlohmann::json j;
  j["data"] = {{"x", matrix_to_json(sim.data.x)},
               {"t", vector_to_json(sim.data.t)},
               {"y", vector_to_json(sim.data.y)}};
  j["x_query"] = matrix_to_json(sim.x_query);
  j["true_cate"] = vector_to_json(sim.true_cate);
  j["true_f_at_train"] = vector_to_json(sim.true_f_at_train);
  j["propensities"] = vector_to_json(sim.propensities);
  return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "' for reading");
  nlohmann::json j;
  in >> j;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::ios_base::failure("write to '" + path + "' failed");
}

/// 6 significant digits, '.' decimal separator; NaN spelled "nan".
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace plgp
