// Copyright 2026 The basinlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "basinlab/nnkit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "basinlab/errors.hpp"
#include "json.hpp"

namespace basinlab::nnkit {

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InvalidInput("unknown activation '" + name + "'");
}

std::string to_string(EntropyBase b) {
  return b == EntropyBase::nats ? "nats" : "bits";
}

EntropyBase entropy_base_from_string(const std::string& name) {
  if (name == "nats") return EntropyBase::nats;
  if (name == "bits") return EntropyBase::bits;
  throw InvalidInput("unknown entropy base '" + name + "'");
}

std::size_t ModelParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

void ModelParams::validate() const {
  require(w1.rows() > 0 && w1.cols() > 0, "w1 must be non-empty");
  require(b1.size() == w1.rows(), "b1 length must equal w1 rows");
  require(w2.cols() == w1.rows(), "w2 columns must equal hidden width");
  require(b2.size() == w2.rows(), "b2 length must equal w2 rows");
  require(w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(),
          "model parameters must be finite");
}

bool ModelParams::operator==(const ModelParams& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.size() == 0 ||
            std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  };
  return activation == o.activation && same(w1, o.w1) && same(b1, o.b1) &&
         same(w2, o.w2) && same(b2, o.b2);
}

ModelParams zero_model(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index classes, Activation act) {
  require(input_dim > 0 && width > 0 && classes > 0, "dimensions must be positive");
  return ModelParams{Matrix::Zero(width, input_dim), Vector::Zero(width),
                     Matrix::Zero(classes, width), Vector::Zero(classes), act};
}

ModelParams init_model(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index classes, std::uint64_t seed, Activation act) {
  ModelParams m = zero_model(input_dim, width, classes, act);
  Rng rng = make_rng(seed);
  m.w1 = gaussian_matrix(rng, width, input_dim, 1.0 / std::sqrt(double(input_dim)));
  m.w2 = gaussian_matrix(rng, classes, width, 1.0 / std::sqrt(double(width)));
  return m;
}

namespace {

template <typename Derived>
void activate_inplace(Eigen::MatrixBase<Derived>& z, Activation act) {
  if (act == Activation::relu)
    z = z.cwiseMax(0.0);
  else
    z = z.array().tanh().matrix();
}

void check_input(const ModelParams& model, Eigen::Index rows) {
  if (rows != model.input_dim())
    throw InvalidInput("input has length " + std::to_string(rows) + ", model expects " +
                       std::to_string(model.input_dim()));
}

}  // namespace

Vector hidden_state(const ModelParams& model, const Vector& x) {
  check_input(model, x.size());
  Vector z = model.w1 * x + model.b1;
  activate_inplace(z, model.activation);
  return z;
}

Vector logits(const ModelParams& model, const Vector& x) {
  return model.w2 * hidden_state(model, x) + model.b2;
}

ForwardTrace forward(const ModelParams& model, const Vector& x) {
  ForwardTrace t;
  t.input = x;
  t.hidden = hidden_state(model, x);
  t.logits = model.w2 * t.hidden + model.b2;
  t.probs = softmax(t.logits);
  return t;
}

Matrix hidden_batch(const ModelParams& model, const Matrix& inputs) {
  check_input(model, inputs.rows());
  Matrix z = model.w1 * inputs;
  z.colwise() += model.b1;
  activate_inplace(z, model.activation);
  return z;
}

Matrix logits_batch(const ModelParams& model, const Matrix& inputs) {
  Matrix out = model.w2 * hidden_batch(model, inputs);
  out.colwise() += model.b2;
  return out;
}

Vector softmax(const Vector& logits) {
  require(logits.size() > 0, "softmax of an empty vector");
  Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  require(logits.size() > 0, "log_softmax of an empty vector");
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

double softmax_entropy(const Vector& logits, EntropyBase base) {
  require(logits.size() >= 2, "entropy needs at least two logits");
  require(logits.allFinite(), "entropy of non-finite logits");
  const double mx = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - mx;
  const Eigen::ArrayXd e = shifted.exp();
  const double z = e.sum();
  // H = log Z - sum p_i * shifted_i, which never evaluates 0 * log 0.
  double h = std::log(z) - (e * shifted).sum() / z;
  h = std::max(h, 0.0);
  return base == EntropyBase::nats ? h : h / std::log(2.0);
}

Eigen::Index argmax(const Vector& v) {
  require(v.size() > 0, "argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

double top2_gap(const Vector& logits) {
  require(logits.size() >= 2, "gap needs at least two logits");
  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (double v : logits) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

Matrix numerical_jacobian(const VectorMap& f, const Vector& x, double eps) {
  require(eps > 0.0, "jacobian step must be positive");
  const Vector f0 = f(x);
  if (!f0.allFinite()) throw NumericError("function is non-finite at the base point");
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + eps;
    const Vector plus = f(xp);
    xp[j] = x[j] - eps;
    const Vector minus = f(xp);
    xp[j] = x[j];
    if (plus.size() != f0.size() || minus.size() != f0.size())
      throw InvalidInput("function output length changed during differencing");
    if (!plus.allFinite() || !minus.allFinite())
      throw NumericError("function is non-finite near coordinate " + std::to_string(j));
    jac.col(j) = (plus - minus) / (2.0 * eps);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;
constexpr char kBinaryMagic[8] = {'B', 'L', 'C', 'K', 'P', 'T', '0', '1'};

json to_row_major(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

Matrix from_row_major(const json& arr, Eigen::Index rows, Eigen::Index cols,
                      const char* name) {
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(rows * cols))
    throw InvalidInput(std::string("checkpoint field '") + name + "' has wrong size");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[k++].get<double>();
  return m;
}

}  // namespace

void save_checkpoint_json(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const ModelParams& m = ckpt.model;
  m.validate();
  json j;
  j["format"] = "basinlab.checkpoint";
  j["version"] = kCheckpointVersion;
  j["seed"] = ckpt.seed;
  j["activation"] = to_string(m.activation);
  j["input_dim"] = m.input_dim();
  j["width"] = m.width();
  j["classes"] = m.class_count();
  j["w1"] = to_row_major(m.w1);
  j["b1"] = to_row_major(m.b1);
  j["w2"] = to_row_major(m.w2);
  j["b2"] = to_row_major(m.b2);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  // nlohmann emits the shortest decimal that round-trips, i.e. at most 17
  // significant digits, so doubles reload bit-exactly.
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  json j = json::parse(in);
  if (j.value("format", "") != "basinlab.checkpoint")
    throw InvalidInput("not a basinlab checkpoint: " + path.string());
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw InvalidInput("unsupported checkpoint version");
  const auto d = j.at("input_dim").get<Eigen::Index>();
  const auto w = j.at("width").get<Eigen::Index>();
  const auto k = j.at("classes").get<Eigen::Index>();
  Checkpoint c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.model.activation = activation_from_string(j.at("activation").get<std::string>());
  c.model.w1 = from_row_major(j.at("w1"), w, d, "w1");
  c.model.b1 = from_row_major(j.at("b1"), w, 1, "b1");
  c.model.w2 = from_row_major(j.at("w2"), k, w, "w2");
  c.model.b2 = from_row_major(j.at("b2"), k, 1, "b2");
  c.model.validate();
  return c;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary checkpoints assume a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("truncated binary checkpoint");
  return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
}

Matrix get_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(in);
  return m;
}

}  // namespace

void save_checkpoint_binary(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const ModelParams& m = ckpt.model;
  m.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, m.activation == Activation::relu ? 0u : 1u);
  put<std::uint64_t>(out, ckpt.seed);
  put<std::int64_t>(out, m.input_dim());
  put<std::int64_t>(out, m.width());
  put<std::int64_t>(out, m.class_count());
  put_matrix(out, m.w1);
  put_matrix(out, m.b1);
  put_matrix(out, m.w2);
  put_matrix(out, m.b2);
}

Checkpoint load_checkpoint_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  char magic[sizeof(kBinaryMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
    throw InvalidInput("not a basinlab binary checkpoint: " + path.string());
  if (get<std::uint32_t>(in) != kCheckpointVersion)
    throw InvalidInput("unsupported checkpoint version");
  Checkpoint c;
  c.model.activation = get<std::uint32_t>(in) == 0 ? Activation::relu : Activation::tanh;
  c.seed = get<std::uint64_t>(in);
  const auto d = get<std::int64_t>(in);
  const auto w = get<std::int64_t>(in);
  const auto k = get<std::int64_t>(in);
  if (d <= 0 || w <= 0 || k <= 0) throw InvalidInput("corrupt checkpoint shape");
  c.model.w1 = get_matrix(in, w, d);
  c.model.b1 = get_matrix(in, w, 1);
  c.model.w2 = get_matrix(in, k, w);
  c.model.b2 = get_matrix(in, k, 1);
  c.model.validate();
  return c;
}

}  // namespace basinlab::nnkit
