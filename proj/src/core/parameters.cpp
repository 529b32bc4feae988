#include "stsn/core/parameters.hpp"

#include <cmath>

#include "stsn/errors.hpp"

namespace stsn {

void initialize(Matrix& m, Init init, std::mt19937_64& rng) {
  switch (init) {
    case Init::kZeros:
      m.setZero();
      break;
    case Init::kOnes:
      m.setOnes();
      break;
    case Init::kIdentity:
      m.setIdentity();
      break;
    case Init::kXavierUniform: {
      const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      std::uniform_real_distribution<double> dist(-a, a);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      break;
    }
    case Init::kNormalScaled: {
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(m.cols())));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      break;
    }
    case Init::kNormal002: {
      std::normal_distribution<double> dist(0.0, 0.02);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      break;
    }
  }
}

Parameter& ParameterStore::add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init,
                               std::mt19937_64& rng, bool decay) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value.resize(rows, cols);
  initialize(p->value, init, rng);
  p->grad.setZero(rows, cols);
  p->first_moment.setZero(rows, cols);
  p->second_moment.setZero(rows, cols);
  p->decay = decay;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterStore::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter " + std::string(name));
}

const Parameter& ParameterStore::get(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter " + std::string(name));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p->size());
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

}  // namespace stsn
