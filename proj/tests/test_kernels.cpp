#include <cmath>

#include <gtest/gtest.h>
#include <omp.h>

#include "generators.hpp"
#include "lyacert/kernels.hpp"
#include "lyacert/learner.hpp"

using namespace lyacert;
using lyacert::testing::Gen;

namespace {

template <class Objective>
void expect_bitwise_equal(const Objective& obj) {
  auto term = [&](std::size_t k, std::span<double> g) { return obj.loss_grad(k, g); };
  const auto ref = kernels::serial::mean_loss_grad(obj.samples(), obj.dim(), term);
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    const auto par = kernels::parallel::mean_loss_grad(obj.samples(), obj.dim(), term);
    EXPECT_EQ(par.loss, ref.loss) << threads << " threads";
    EXPECT_EQ(par.grad, ref.grad) << threads << " threads";
  }
}

}  // namespace

TEST(Kernels, ConstantObjectiveBitwiseEqual) {
  Gen gen(1);
  for (std::size_t count : {1u, 7u, 1000u, 4096u, 4097u, 10000u}) {
    const auto traj = gen.samples(count, 2);
    const auto p = gen.cholesky(2);
    expect_bitwise_equal(ConstantObjective(p, traj, 0.1));
  }
}

TEST(Kernels, MlpObjectiveBitwiseEqual) {
  Gen gen(2);
  for (std::size_t count : {1u, 33u, 5000u}) {
    const auto traj = gen.samples(count, 2);
    const auto p = gen.mlp(2, {6, 4});
    expect_bitwise_equal(MlpObjective(p, traj, 0.1));
  }
}

TEST(Kernels, MeanLossAndMapBitwiseEqual) {
  Gen gen(3);
  std::vector<double> v(9999);
  for (double& x : v) x = gen.normal(1e3);
  auto f = [&](std::size_t k) { return std::sin(v[k]) * v[k]; };
  const double ref = kernels::serial::mean_loss(v.size(), f);
  const auto ref_map = kernels::serial::map(v.size(), f);
  for (int threads : {1, 4, 7}) {
    omp_set_num_threads(threads);
    EXPECT_EQ(kernels::parallel::mean_loss(v.size(), f), ref);
    EXPECT_EQ(kernels::parallel::map(v.size(), f), ref_map);
  }
}

TEST(Kernels, EmptyInput) {
  auto term = [](std::size_t, std::span<double>) { return 1.0; };
  EXPECT_EQ(kernels::parallel::mean_loss_grad(0, 3, term).loss, 0.0);
  EXPECT_EQ(kernels::serial::mean_loss_grad(0, 3, term).grad, Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(kernels::parallel::map(0, [](std::size_t) { return 0.0; }).empty());
}

TEST(Kernels, BatchLossMatchesSerialReduction) {
  Gen gen(4);
  const auto traj = gen.samples(3000, 2);
  const auto p = gen.cholesky(2);
  const ConstantObjective obj(p, traj, 0.05);
  const double serial = kernels::serial::mean_loss(traj.samples(), [&](std::size_t k) { return obj.loss(k); });
  EXPECT_EQ(batch_loss(p, traj, 0.05), serial);
}
