#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clickseq/behavior.hpp"

namespace clickseq {
namespace {

using ojson = nlohmann::ordered_json;

ojson rows_of(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson vec_of(const Vector& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(ErrorKind::schema, std::string("model file: bad row count for ") + what);
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::schema, std::string("model file: bad column count for ") + what);
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from(const nlohmann::json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw Error(ErrorKind::schema, std::string("model file: bad length for ") + what);
  }
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string behavior_model_json(const BehaviorModel& model) {
  ojson doc;
  doc["kind"] = std::string(model.kind());
  doc["K"] = model.num_states();
  doc["C"] = model.num_categories();
  if (const auto* h = std::get_if<HmmParams>(&model.params)) {
    doc["pi"] = vec_of(h->initial);
    doc["A"] = rows_of(h->transition);
    doc["B"] = rows_of(h->emission);
  } else {
    const auto& m = std::get<MmmParams>(model.params);
    doc["pi"] = vec_of(m.prior);
    doc["theta"] = rows_of(m.theta);
  }
  doc["category_names"] = model.category_names;
  doc["seed"] = model.seed;
  doc["final_loglik"] = model.final_loglik;
  return doc.dump(1) + "\n";
}

BehaviorModel parse_behavior_model(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorKind::schema, "model file is not a JSON object");
  try {
    BehaviorModel model;
    const auto kind = doc.at("kind").get<std::string>();
    const auto k = doc.at("K").get<Eigen::Index>();
    const auto c = doc.at("C").get<Eigen::Index>();
    model.category_names = doc.at("category_names").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(model.category_names.size()) != c) {
      throw Error(ErrorKind::schema, "model file: category_names length differs from C");
    }
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.final_loglik = doc.at("final_loglik").get<double>();
    if (kind == "hmm") {
      HmmParams p;
      p.initial = vector_from(doc.at("pi"), k, "pi");
      p.transition = matrix_from(doc.at("A"), k, k, "A");
      p.emission = matrix_from(doc.at("B"), k, c, "B");
      model.params = std::move(p);
    } else if (kind == "mmm") {
      MmmParams p;
      p.prior = vector_from(doc.at("pi"), k, "pi");
      p.theta = matrix_from(doc.at("theta"), k, c, "theta");
      model.params = std::move(p);
    } else {
      throw Error(ErrorKind::schema, "model file: unknown kind " + kind);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("model file: ") + e.what());
  }
}

void save_behavior_model(const BehaviorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write model file: " + path.string());
  out << behavior_model_json(model);
}

BehaviorModel load_behavior_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open model file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_behavior_model(ss.str());
}

}  // namespace clickseq
