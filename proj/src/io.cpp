#include "chronospec/io.hpp"

namespace chronospec {
namespace {

nlohmann::json pair(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

cplx unpair(const nlohmann::json& p) {
  if (!p.is_array() || p.size() != 2) throw DomainError("expected an [re, im] pair");
  return {p[0].get<double>(), p[1].get<double>()};
}

}  // namespace

nlohmann::json matrix_to_json(const MatrixXc& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(pair(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"layout", "row-major [re, im]"}, {"data", std::move(data)}};
}

MatrixXc matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DomainError("matrix dump: data length mismatch");
  MatrixXc m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = unpair(data[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

nlohmann::json vector_to_json(const VectorXc& v) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(pair(v(i)));
  return {{"size", v.size()}, {"data", std::move(data)}};
}

VectorXc vector_from_json(const nlohmann::json& j) {
  const auto& data = j.at("data");
  VectorXc v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v(static_cast<Eigen::Index>(i)) = unpair(data[i]);
  if (j.contains("size") && j["size"].get<Eigen::Index>() != v.size())
    throw DomainError("vector dump: size mismatch");
  return v;
}

}  // namespace chronospec
