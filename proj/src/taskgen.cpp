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

#include "basinlab/taskgen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "basinlab/errors.hpp"
#include "json.hpp"

namespace basinlab::taskgen {

Matrix Dataset::seen_inputs() const {
  Matrix x(d_in, static_cast<Eigen::Index>(seen.size()));
  for (std::size_t i = 0; i < seen.size(); ++i) x.col(i) = seen[i].embedding;
  return x;
}

std::vector<int> Dataset::seen_codes() const {
  std::vector<int> codes;
  codes.reserve(seen.size());
  for (const auto& e : seen) codes.push_back(e.code);
  return codes;
}

const Entity* Dataset::find(EntityId id) const {
  for (const auto& e : seen)
    if (e.id == id) return &e;
  for (const auto& e : unseen)
    if (e.id == id) return &e;
  return nullptr;
}

Dataset generate_dataset(int n_seen, int n_unseen, int d_in, int classes,
                         std::uint64_t seed) {
  require(n_seen >= 0 && n_unseen >= 0 && n_seen + n_unseen >= 1,
          "dataset needs at least one entity");
  require(classes >= 2, "need at least two classes");
  require(d_in >= 1, "input dimension must be positive");
  if (d_in < 8 && n_seen > (1 << d_in))
    throw InvalidInput("collision risk: " + std::to_string(n_seen) +
                       " entities in dimension " + std::to_string(d_in));

  Dataset ds;
  ds.d_in = d_in;
  ds.classes = classes;
  ds.seed = seed;
  Rng emb_rng = make_rng(derive_seed(seed, "embeddings"));
  Rng code_rng = make_rng(derive_seed(seed, "codes"));
  std::uniform_int_distribution<int> code_dist(0, classes - 1);

  auto make = [&](int id) {
    Entity e;
    e.id = id;
    Vector v = gaussian_vector(emb_rng, d_in);
    double n = v.norm();
    while (n == 0.0) {
      v = gaussian_vector(emb_rng, d_in);
      n = v.norm();
    }
    e.embedding = v / n;
    e.code = code_dist(code_rng);
    return e;
  };
  for (int i = 0; i < n_seen; ++i) ds.seen.push_back(make(i));
  for (int i = 0; i < n_unseen; ++i) ds.unseen.push_back(make(n_seen + i));
  return ds;
}

Vector perturb_on_sphere(const Vector& x, double noise_scale, Rng& rng) {
  const double norm = x.norm();
  Vector v = x + gaussian_vector(rng, x.size(), noise_scale * norm);
  const double vn = v.norm();
  if (vn == 0.0) return x;
  return v * (norm / vn);
}

VariantSet make_variants(const Entity& entity, int k, double noise_scale,
                         std::uint64_t seed) {
  require(k >= 1, "need at least one variant");
  require(noise_scale >= 0.0, "noise scale must be non-negative");
  VariantSet vs;
  vs.entity_id = entity.id;
  vs.noise_scale = noise_scale;
  vs.variants.reserve(k);
  vs.variants.push_back(entity.embedding);
  Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(entity.id)));
  for (int i = 1; i < k; ++i) {
    if (noise_scale == 0.0)
      vs.variants.push_back(entity.embedding);
    else
      vs.variants.push_back(perturb_on_sphere(entity.embedding, noise_scale, rng));
  }
  return vs;
}

nnkit::ModelParams make_teacher(int d_in, int classes, int width, std::uint64_t seed) {
  require(width >= 1, "teacher width must be positive");
  return nnkit::init_model(d_in, width, classes, derive_seed(seed, "teacher"));
}

Vector teacher_targets(const nnkit::ModelParams& teacher, const Vector& x, double beta) {
  return nnkit::softmax(beta * nnkit::logits(teacher, x));
}

Dataset relabel_with_teacher(Dataset ds, const nnkit::ModelParams& teacher) {
  for (auto* list : {&ds.seen, &ds.unseen})
    for (auto& e : *list)
      e.code = static_cast<int>(nnkit::argmax(nnkit::logits(teacher, e.embedding)));
  return ds;
}

namespace {

using nlohmann::json;

json entity_json(const Entity& e) {
  return json{{"id", e.id},
              {"code", e.code},
              {"embedding", std::vector<double>(e.embedding.begin(), e.embedding.end())}};
}

Entity entity_from_json(const json& j, int d_in) {
  Entity e;
  e.id = j.at("id").get<int>();
  e.code = j.at("code").get<int>();
  const auto v = j.at("embedding").get<std::vector<double>>();
  if (static_cast<int>(v.size()) != d_in)
    throw InvalidInput("entity " + std::to_string(e.id) + " has wrong embedding length");
  e.embedding = Eigen::Map<const Vector>(v.data(), d_in);
  return e;
}

}  // namespace

void save_dataset_json(const Dataset& ds, const std::filesystem::path& path) {
  json j;
  j["format"] = "basinlab.dataset";
  j["version"] = 1;
  j["d_in"] = ds.d_in;
  j["classes"] = ds.classes;
  j["seed"] = ds.seed;
  j["seen"] = json::array();
  j["unseen"] = json::array();
  for (const auto& e : ds.seen) j["seen"].push_back(entity_json(e));
  for (const auto& e : ds.unseen) j["unseen"].push_back(entity_json(e));
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  out << j.dump() << '\n';
}

Dataset load_dataset_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset " + path.string());
  const json j = json::parse(in);
  if (j.value("format", "") != "basinlab.dataset")
    throw InvalidInput("not a basinlab dataset: " + path.string());
  Dataset ds;
  ds.d_in = j.at("d_in").get<int>();
  ds.classes = j.at("classes").get<int>();
  ds.seed = j.at("seed").get<std::uint64_t>();
  std::set<int> ids;
  for (const auto& e : j.at("seen")) ds.seen.push_back(entity_from_json(e, ds.d_in));
  for (const auto& e : j.at("unseen")) ds.unseen.push_back(entity_from_json(e, ds.d_in));
  for (const auto* list : {&ds.seen, &ds.unseen})
    for (const auto& e : *list)
      if (!ids.insert(e.id).second)
        throw InvalidInput("duplicate entity id " + std::to_string(e.id));
  return ds;
}

}  // namespace basinlab::taskgen
