#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "hamkrr/core.hpp"
#include "hamkrr/estimator.hpp"
#include "hamkrr/kernel.hpp"
#include "hamkrr/systems.hpp"

namespace hamkrr::io {

using nlohmann::json;

/// Writes through a sibling temp file and renames it into place.
inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& writer) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw ValidationError("failed writing '" + path.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace detail {

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  return v.get<double>();
}

inline std::int64_t integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

inline Vector vector(const json& v, Eigen::Index len, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  if (len >= 0 && static_cast<Eigen::Index>(v.size()) != len)
    throw ValidationError(where + ": expected " + std::to_string(len) +
                          " entries, got " + std::to_string(v.size()));
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

inline std::vector<Vector> rows(const json& v, std::int64_t count, Eigen::Index len,
                                const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  if (static_cast<std::int64_t>(v.size()) != count)
    throw ValidationError(where + ": header declares " + std::to_string(count) +
                          " rows but " + std::to_string(v.size()) + " are present");
  std::vector<Vector> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(vector(v[i], len, where + "[" + std::to_string(i) + "]"));
  return out;
}

inline json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
}

}  // namespace detail

// Dataset files (.hamdata.json):
//   {"d":int,"N":int,"sigma":float,"seed":int,"system":string|null,
//    "box":[[lo,hi],...],"points":[[...]],"observations":[[...]]}
// Reals are written in shortest round-trip form.

inline json dataset_to_json(const Dataset& data) {
  data.validate();
  json j;
  j["d"] = data.d;
  j["N"] = data.n();
  j["sigma"] = data.sigma;
  j["seed"] = data.seed;
  j["system"] = data.system ? json(*data.system) : json(nullptr);
  j["box"] = json::array();
  for (const auto& [lo, hi] : data.box) j["box"].push_back({lo, hi});
  j["points"] = json::array();
  j["observations"] = json::array();
  for (const auto& p : data.points) j["points"].push_back(detail::to_json(p));
  for (const auto& x : data.observations) j["observations"].push_back(detail::to_json(x));
  return j;
}

inline Dataset dataset_from_json(const json& j, const std::string& where = "dataset") {
  using detail::field;
  Dataset data;
  const std::int64_t d = detail::integer(field(j, "d", where), where + ".d");
  if (d < 1) throw ValidationError(where + ".d: must be >= 1");
  data.d = d;
  const std::int64_t n = detail::integer(field(j, "N", where), where + ".N");
  if (n < 1) throw ValidationError(where + ".N: must be >= 1");
  data.sigma = detail::number(field(j, "sigma", where), where + ".sigma");
  if (!(data.sigma >= 0.0)) throw ValidationError(where + ".sigma: must be >= 0");
  const auto& seed = field(j, "seed", where);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw ValidationError(where + ".seed: expected a nonnegative integer");
  data.seed = seed.get<std::uint64_t>();
  const auto& system = field(j, "system", where);
  if (system.is_string()) data.system = system.get<std::string>();
  else if (!system.is_null()) throw ValidationError(where + ".system: expected string or null");
  const auto& box = field(j, "box", where);
  if (!box.is_array()) throw ValidationError(where + ".box: expected an array");
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Vector iv = detail::vector(box[i], 2, where + ".box[" + std::to_string(i) + "]");
    data.box.emplace_back(iv[0], iv[1]);
  }
  data.points = detail::rows(field(j, "points", where), n, 2 * d, where + ".points");
  data.observations =
      detail::rows(field(j, "observations", where), n, 2 * d, where + ".observations");
  data.validate();
  return data;
}

inline void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  const std::string text = dataset_to_json(data).dump();
  write_atomically(path, [&](std::ostream& out) { out << text << '\n'; });
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  return dataset_from_json(detail::parse_file(path), path.string());
}

// Model files:
//   {"kernel":{"eta":f},"lambda":f,"d":i,"n":i,"points":[[...]],"coeffs":[...]}

inline json model_to_json(const FittedModel& model) {
  json j;
  j["kernel"] = {{"eta", model.kernel.eta()}};
  j["lambda"] = model.lambda;
  j["d"] = model.d;
  j["n"] = model.n();
  j["points"] = json::array();
  for (const auto& p : model.train_points) j["points"].push_back(detail::to_json(p));
  j["coeffs"] = detail::to_json(model.coeffs);
  return j;
}

inline FittedModel model_from_json(const json& j, const std::string& where = "model") {
  using detail::field;
  const auto& kernel = field(j, "kernel", where);
  const double eta = detail::number(field(kernel, "eta", where + ".kernel"), where + ".kernel.eta");
  if (!(eta > 0.0)) throw ValidationError(where + ".kernel.eta: must be > 0");
  const double lambda = detail::number(field(j, "lambda", where), where + ".lambda");
  if (!(lambda > 0.0)) throw ValidationError(where + ".lambda: must be > 0");
  const std::int64_t d = detail::integer(field(j, "d", where), where + ".d");
  const std::int64_t n = detail::integer(field(j, "n", where), where + ".n");
  if (d < 1 || n < 1) throw ValidationError(where + ": d and n must be >= 1");
  FittedModel model{GaussianKernel(eta), lambda, d, {}, {}, 0.0};
  model.train_points = detail::rows(field(j, "points", where), n, 2 * d, where + ".points");
  model.coeffs = detail::vector(field(j, "coeffs", where), 2 * d * n, where + ".coeffs");
  return model;
}

inline void write_model(const FittedModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model).dump();
  write_atomically(path, [&](std::ostream& out) { out << text << '\n'; });
}

inline FittedModel read_model(const std::filesystem::path& path) {
  return model_from_json(detail::parse_file(path), path.string());
}

}  // namespace hamkrr::io
