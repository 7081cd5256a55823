#include "distobs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace distobs {

using nlohmann::json;

namespace {

constexpr double kDuplicateEigTol = 1e-9;

[[noreturn]] void fail(ModelError::Kind kind, const std::string& what) {
  throw ModelError(kind, what);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(ModelError::Kind::kParse, where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ModelError::Kind::kParse, where + ": non-finite value");
  return v;
}

// Row-major matrix. `cols` < 0 means "infer from the first row".
Eigen::MatrixXd matrix(const json& j, const std::string& where, int cols = -1) {
  if (!j.is_array()) fail(ModelError::Kind::kParse, where + ": expected a list of rows");
  const int rows = static_cast<int>(j.size());
  if (cols < 0) {
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    if (!j[0].is_array()) fail(ModelError::Kind::kParse, where + ": row 1 is not a list");
    cols = static_cast<int>(j[0].size());
  }
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array()) {
      fail(ModelError::Kind::kParse, where + ": row " + std::to_string(r + 1) + " is not a list");
    }
    if (static_cast<int>(row.size()) != cols) {
      fail(ModelError::Kind::kDimension, where + ": row " + std::to_string(r + 1) + " has " +
                                             std::to_string(row.size()) + " entries, expected " +
                                             std::to_string(cols));
    }
    for (int c = 0; c < cols; ++c) M(r, c) = number(row[c], where);
  }
  return M;
}

Eigen::VectorXd vector(const json& j, const std::string& where, int size) {
  if (!j.is_array()) fail(ModelError::Kind::kParse, where + ": expected a list");
  if (static_cast<int>(j.size()) != size) {
    fail(ModelError::Kind::kDimension, where + ": length " + std::to_string(j.size()) +
                                           ", expected " + std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (int k = 0; k < size; ++k) v(k) = number(j[k], where);
  return v;
}

json rows_json(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

InputChannel parse_channel(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ModelError::Kind::kParse, where + ": expected an object");
  InputChannel ch;
  const std::string kind = j.value("kind", std::string("zero"));
  if (kind == "zero") {
    ch.kind = InputChannel::Kind::kZero;
  } else if (kind == "constant") {
    ch.kind = InputChannel::Kind::kConstant;
    ch.value = number(j.at("value"), where + ".value");
  } else if (kind == "sinusoid") {
    ch.kind = InputChannel::Kind::kSinusoid;
    ch.value = number(j.at("amplitude"), where + ".amplitude");
    ch.period = number(j.at("period"), where + ".period");
    if (!(ch.period > 0.0)) fail(ModelError::Kind::kInvariant, where + ": period must be > 0");
  } else {
    fail(ModelError::Kind::kParse, where + ": unknown input kind '" + kind + "'");
  }
  return ch;
}

json channel_json(const InputChannel& ch) {
  switch (ch.kind) {
    case InputChannel::Kind::kZero:
      return {{"kind", "zero"}};
    case InputChannel::Kind::kConstant:
      return {{"kind", "constant"}, {"value", ch.value}};
    case InputChannel::Kind::kSinusoid:
      return {{"kind", "sinusoid"}, {"amplitude", ch.value}, {"period", ch.period}};
  }
  return {};
}

SimConfig parse_sim(const json& j, const PlantModel& model, int num_agents) {
  SimConfig cfg;
  cfg.x0 = Eigen::VectorXd::Zero(model.n());
  if (j.is_null()) return cfg;
  if (!j.is_object()) fail(ModelError::Kind::kParse, "simulation: expected an object");

  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer() || j["horizon"].get<long long>() <= 0) {
      fail(ModelError::Kind::kInvariant, "simulation.horizon: expected a positive integer");
    }
    cfg.horizon = j["horizon"].get<int>();
  }
  if (j.contains("x0")) {
    cfg.x0 = model.vector_from_user(vector(j["x0"], "simulation.x0", model.n()));
  }
  if (j.contains("observer_init")) {
    const json& init = j["observer_init"];
    if (init.is_string()) {
      const std::string mode = init.get<std::string>();
      if (mode == "zero") {
        cfg.observer_init = ObserverInit::kZero;
      } else if (mode == "random") {
        cfg.observer_init = ObserverInit::kRandom;
      } else {
        fail(ModelError::Kind::kParse, "simulation.observer_init: unknown mode '" + mode + "'");
      }
    } else if (init.is_array()) {
      if (static_cast<int>(init.size()) != num_agents) {
        fail(ModelError::Kind::kDimension,
             "simulation.observer_init: expected one vector per agent (" +
                 std::to_string(num_agents) + ")");
      }
      cfg.observer_init = ObserverInit::kExplicit;
      for (int i = 0; i < num_agents; ++i) {
        cfg.explicit_init.push_back(model.vector_from_user(vector(
            init[i], "simulation.observer_init[agent " + std::to_string(i + 1) + "]", model.n())));
      }
    } else {
      fail(ModelError::Kind::kParse, "simulation.observer_init: expected a string or a list");
    }
  }
  if (j.contains("input")) {
    const json& input = j["input"];
    if (!input.is_array() || static_cast<int>(input.size()) != model.m()) {
      fail(ModelError::Kind::kDimension,
           "simulation.input: expected one channel per input (" + std::to_string(model.m()) + ")");
    }
    for (std::size_t c = 0; c < input.size(); ++c) {
      cfg.input.push_back(parse_channel(input[c], "simulation.input[" + std::to_string(c + 1) + "]"));
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) fail(ModelError::Kind::kParse, "simulation.seed: expected an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  return cfg;
}

}  // namespace

std::string ModeId::label() const {
  return std::to_string(eig + 1) + "," + std::to_string(block + 1);
}

double InputChannel::evaluate(int t) const {
  switch (kind) {
    case Kind::kZero:
      return 0.0;
    case Kind::kConstant:
      return value;
    case Kind::kSinusoid:
      return value * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
  }
  return 0.0;
}

Eigen::VectorXd SimConfig::input_at(int t, int channels) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(channels);
  for (int c = 0; c < channels && c < static_cast<int>(input.size()); ++c) u(c) = input[c].evaluate(t);
  return u;
}

EigenvalueSpec::EigenvalueSpec(Kind kind, double re, double im)
    : kind_(kind), re_(re), im_(im), modulus_(std::hypot(re, im)) {}

EigenvalueSpec EigenvalueSpec::Real(double a) {
  if (!std::isfinite(a)) fail(ModelError::Kind::kInvariant, "eigenvalue is not finite");
  return EigenvalueSpec(Kind::kReal, a, 0.0);
}

EigenvalueSpec EigenvalueSpec::ComplexPair(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    fail(ModelError::Kind::kInvariant, "eigenvalue is not finite");
  }
  if (!(b > 0.0)) fail(ModelError::Kind::kInvariant, "complex pair requires im > 0");
  return EigenvalueSpec(Kind::kComplexPair, a, b);
}

Eigen::MatrixXd assemble_A(const std::vector<EigenvalueSpec>& eigs,
                           const std::vector<MiniblockSpec>& blocks, int n) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const MiniblockSpec& b : blocks) {
    const EigenvalueSpec& e = eigs.at(b.eig_index);
    const int u = b.unit_size;
    for (int k = 0; k < b.dim_units; ++k) {
      const int o = b.state_offset + k * u;
      if (u == 1) {
        A(o, o) = e.re();
      } else {
        A(o, o) = e.re();
        A(o, o + 1) = e.im();
        A(o + 1, o) = -e.im();
        A(o + 1, o + 1) = e.re();
      }
      if (k + 1 < b.dim_units) A.block(o, o + u, u, u).setIdentity();
    }
  }
  return A;
}

PlantModel::PlantModel(std::vector<EigenvalueSpec> eigs,
                       std::vector<std::vector<int>> miniblock_dims, Eigen::MatrixXd B,
                       std::optional<Eigen::MatrixXd> transform) {
  if (eigs.empty()) fail(ModelError::Kind::kInvariant, "model has no eigenvalues");
  if (miniblock_dims.size() != eigs.size()) {
    fail(ModelError::Kind::kDimension, "one miniblock_dims list is required per eigenvalue");
  }
  for (std::size_t a = 0; a < eigs.size(); ++a) {
    if (miniblock_dims[a].empty()) {
      fail(ModelError::Kind::kInvariant,
           "eigenvalue " + std::to_string(a + 1) + " has no miniblocks");
    }
    for (int d : miniblock_dims[a]) {
      if (d <= 0) {
        fail(ModelError::Kind::kInvariant,
             "eigenvalue " + std::to_string(a + 1) + ": miniblock dimension must be positive");
      }
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (std::abs(eigs[a].value() - eigs[b].value()) <= kDuplicateEigTol) {
        fail(ModelError::Kind::kInvariant, "eigenvalues " + std::to_string(b + 1) + " and " +
                                               std::to_string(a + 1) + " are duplicates");
      }
    }
  }

  // User-order state offsets, then the stable partition by stability.
  std::vector<int> user_offset(eigs.size(), 0);
  std::vector<int> user_size(eigs.size(), 0);
  int total = 0;
  for (std::size_t a = 0; a < eigs.size(); ++a) {
    user_offset[a] = total;
    for (int d : miniblock_dims[a]) user_size[a] += d * eigs[a].unit_size();
    total += user_size[a];
  }
  n_ = total;

  eig_user_order_.resize(eigs.size());
  std::iota(eig_user_order_.begin(), eig_user_order_.end(), 0);
  std::stable_partition(eig_user_order_.begin(), eig_user_order_.end(),
                        [&](int a) { return eigs[a].unstable(); });

  int offset = 0;
  for (int l = 0; l < static_cast<int>(eigs.size()); ++l) {
    const int a = eig_user_order_[l];
    eigs_.push_back(eigs[a]);
    if (eigs[a].unstable()) ++num_unstable_;
    eig_first_block_.push_back(static_cast<int>(blocks_.size()));
    const auto& dims = miniblock_dims[a];
    for (int h = 0; h < static_cast<int>(dims.size()); ++h) {
      MiniblockSpec b{l, h, dims[h], eigs[a].unit_size(), offset};
      offset += b.size();
      blocks_.push_back(b);
    }
    for (int k = 0; k < user_size[a]; ++k) state_user_order_.push_back(user_offset[a] + k);
  }
  eig_first_block_.push_back(static_cast<int>(blocks_.size()));

  if (B.rows() != n_) {
    fail(ModelError::Kind::kDimension, "B has " + std::to_string(B.rows()) +
                                           " rows, expected n = " + std::to_string(n_));
  }
  B_.resize(n_, B.cols());
  for (int k = 0; k < n_; ++k) B_.row(k) = B.row(state_user_order_[k]);

  if (transform) {
    if (transform->rows() != n_ || transform->cols() != n_) {
      fail(ModelError::Kind::kDimension, "transform must be " + std::to_string(n_) + "x" +
                                             std::to_string(n_));
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(*transform);
    if (!lu.isInvertible()) fail(ModelError::Kind::kInvariant, "transform is singular");
    T_ = columns_from_user(*transform);
  }

  A_ = assemble_A(eigs_, blocks_, n_);
}

std::span<const MiniblockSpec> PlantModel::blocks_of(int l) const {
  const int first = eig_first_block_.at(l);
  const int last = eig_first_block_.at(l + 1);
  return std::span<const MiniblockSpec>(blocks_).subspan(first, last - first);
}

const MiniblockSpec& PlantModel::block(ModeId id) const {
  const auto span = blocks_of(id.eig);
  if (id.block < 0 || id.block >= static_cast<int>(span.size())) {
    throw std::out_of_range("no miniblock " + id.label());
  }
  return span[id.block];
}

std::vector<ModeId> PlantModel::unstable_modes() const {
  std::vector<ModeId> out;
  for (int l = 0; l < num_unstable_; ++l) {
    for (int h = 0; h < num_blocks(l); ++h) out.push_back({l, h});
  }
  return out;
}

Eigen::MatrixXd PlantModel::columns_from_user(const Eigen::MatrixXd& M) const {
  Eigen::MatrixXd out(M.rows(), n_);
  for (int k = 0; k < n_; ++k) out.col(k) = M.col(state_user_order_[k]);
  return out;
}

Eigen::VectorXd PlantModel::vector_from_user(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(n_);
  for (int k = 0; k < n_; ++k) out(k) = v(state_user_order_[k]);
  return out;
}

Eigen::VectorXd PlantModel::vector_to_user(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(n_);
  for (int k = 0; k < n_; ++k) out(state_user_order_[k]) = v(k);
  return out;
}

Eigen::MatrixXd PlantModel::block_matrix(ModeId id) const {
  const MiniblockSpec& b = block(id);
  return A_.block(b.state_offset, b.state_offset, b.size(), b.size());
}

Eigen::MatrixXd SensorSuite::stacked() const {
  if (C.empty()) return {};
  Eigen::Index rows = 0;
  for (const auto& c : C) rows += c.rows();
  Eigen::MatrixXd out(rows, C.front().cols());
  Eigen::Index r = 0;
  for (const auto& c : C) {
    out.middleRows(r, c.rows()) = c;
    r += c.rows();
  }
  return out;
}

Eigen::MatrixXd laplacian_of(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    fail(ModelError::Kind::kDimension, "adjacency must be square");
  }
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double w = adjacency(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        fail(ModelError::Kind::kInvariant, "adjacency(" + std::to_string(i + 1) + "," +
                                               std::to_string(j + 1) + ") is negative");
      }
      if (i == j && w != 0.0) {
        fail(ModelError::Kind::kInvariant,
             "adjacency diagonal entry " + std::to_string(i + 1) + " is nonzero");
      }
    }
  }
  Eigen::MatrixXd L = -adjacency;
  L.diagonal() = adjacency.rowwise().sum();
  return L;
}

CommGraph::CommGraph(Eigen::MatrixXd adjacency)
    : adjacency_(std::move(adjacency)), laplacian_(laplacian_of(adjacency_)) {
  neighbors_.resize(adjacency_.rows());
  for (Eigen::Index i = 0; i < adjacency_.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) {
      if (adjacency_(i, j) > 0.0) neighbors_[i].push_back(static_cast<int>(j));
    }
  }
}

Problem parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ModelError::Kind::kParse, std::string("malformed model file: ") + e.what());
  }
  if (!doc.is_object()) fail(ModelError::Kind::kParse, "model file must be a JSON object");
  for (const char* key : {"eigenvalues", "B", "sensors", "adjacency"}) {
    if (!doc.contains(key)) fail(ModelError::Kind::kParse, std::string("missing key '") + key + "'");
  }

  std::vector<EigenvalueSpec> eigs;
  std::vector<std::vector<int>> dims;
  const json& jeigs = doc["eigenvalues"];
  if (!jeigs.is_array()) fail(ModelError::Kind::kParse, "eigenvalues: expected a list");
  for (std::size_t a = 0; a < jeigs.size(); ++a) {
    const std::string where = "eigenvalues[" + std::to_string(a + 1) + "]";
    const json& e = jeigs[a];
    if (!e.is_object() || !e.contains("re") || !e.contains("miniblock_dims")) {
      fail(ModelError::Kind::kParse, where + ": expected {re, im, miniblock_dims}");
    }
    const double re = number(e["re"], where + ".re");
    const double im = e.contains("im") ? number(e["im"], where + ".im") : 0.0;
    if (im < 0.0) {
      fail(ModelError::Kind::kInvariant, where + ": give the conjugate with im > 0");
    }
    eigs.push_back(im == 0.0 ? EigenvalueSpec::Real(re) : EigenvalueSpec::ComplexPair(re, im));
    std::vector<int> d;
    if (!e["miniblock_dims"].is_array()) {
      fail(ModelError::Kind::kParse, where + ".miniblock_dims: expected a list");
    }
    for (const json& v : e["miniblock_dims"]) {
      if (!v.is_number_integer()) {
        fail(ModelError::Kind::kParse, where + ".miniblock_dims: expected integers");
      }
      d.push_back(v.get<int>());
    }
    dims.push_back(std::move(d));
  }

  Eigen::MatrixXd B = matrix(doc["B"], "B");

  std::optional<Eigen::MatrixXd> T;
  if (doc.contains("transform") && !doc["transform"].is_null()) T = matrix(doc["transform"], "transform");

  PlantModel model(std::move(eigs), std::move(dims), std::move(B), std::move(T));

  const json& jsensors = doc["sensors"];
  if (!jsensors.is_array() || jsensors.empty()) {
    fail(ModelError::Kind::kParse, "sensors: expected a nonempty list of matrices");
  }
  SensorSuite sensors;
  for (std::size_t i = 0; i < jsensors.size(); ++i) {
    const std::string where = "sensors[agent " + std::to_string(i + 1) + "]";
    Eigen::MatrixXd C = matrix(jsensors[i], where);
    if (C.rows() > 0 && C.cols() != model.n()) {
      fail(ModelError::Kind::kDimension, where + ": C_" + std::to_string(i + 1) + " has " +
                                             std::to_string(C.cols()) + " columns, expected n = " +
                                             std::to_string(model.n()));
    }
    if (C.rows() == 0) C.resize(0, model.n());
    sensors.C.push_back(model.columns_from_user(C));
  }

  Eigen::MatrixXd adjacency = matrix(doc["adjacency"], "adjacency");
  if (adjacency.rows() != sensors.N() || adjacency.cols() != sensors.N()) {
    fail(ModelError::Kind::kDimension, "adjacency must be " + std::to_string(sensors.N()) + "x" +
                                           std::to_string(sensors.N()) + " (one node per agent)");
  }
  CommGraph graph(std::move(adjacency));

  SimConfig sim = parse_sim(doc.contains("simulation") ? doc["simulation"] : json(), model,
                            sensors.N());
  return Problem{std::move(model), std::move(sensors), std::move(graph), std::move(sim)};
}

Problem load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ModelError::Kind::kParse, "cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string serialize_model(const Problem& problem) {
  const PlantModel& model = problem.model;
  json doc;
  json eigs = json::array();
  for (int l = 0; l < model.num_eigs(); ++l) {
    json dims = json::array();
    for (const auto& b : model.blocks_of(l)) dims.push_back(b.dim_units);
    eigs.push_back({{"re", model.eig(l).re()}, {"im", model.eig(l).im()}, {"miniblock_dims", dims}});
  }
  doc["eigenvalues"] = eigs;
  doc["B"] = rows_json(model.B());
  json sensors = json::array();
  for (const auto& C : problem.sensors.C) sensors.push_back(rows_json(C));
  doc["sensors"] = sensors;
  doc["adjacency"] = rows_json(problem.graph.adjacency());
  if (model.transform()) doc["transform"] = rows_json(*model.transform());

  const SimConfig& sim = problem.sim;
  json js;
  js["horizon"] = sim.horizon;
  js["x0"] = vector_json(sim.x0.size() == model.n() ? sim.x0 : Eigen::VectorXd::Zero(model.n()));
  switch (sim.observer_init) {
    case ObserverInit::kZero:
      js["observer_init"] = "zero";
      break;
    case ObserverInit::kRandom:
      js["observer_init"] = "random";
      break;
    case ObserverInit::kExplicit: {
      json init = json::array();
      for (const auto& v : sim.explicit_init) init.push_back(vector_json(v));
      js["observer_init"] = init;
      break;
    }
  }
  if (!sim.input.empty()) {
    json input = json::array();
    for (const auto& ch : sim.input) input.push_back(channel_json(ch));
    js["input"] = input;
  }
  js["seed"] = sim.seed;
  doc["simulation"] = js;
  return doc.dump(2);
}

}  // namespace distobs
