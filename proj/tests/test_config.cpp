#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/expansion.hpp"

using namespace kinetic_layer;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_CASE("defaults") {
  const ExperimentConfig config = parse("");
  CHECK(config.r_minus == 1.0);
  CHECK(config.r_plus == 2.0);
  CHECK(config.epsilons == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(config.n_grazing == 0.5);
  CHECK(config.variant == Variant::geometric);
}

TEST_CASE("every key") {
  const ExperimentConfig config = parse(R"(# sample
r_minus = 0.5
r_plus=3   # outer radius
epsilon_list = 0.2, 0.1,0.05
n_grazing = 0.25
n_eta = 121
n_phi = 32
n_r = 41
slab_length = 12
tolerance = 1e-9
variant = classical
output = out.csv
)");
  CHECK(config.r_minus == 0.5);
  CHECK(config.r_plus == 3.0);
  CHECK(config.epsilons == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(config.n_grazing == 0.25);
  CHECK(config.n_eta == 121);
  CHECK(config.n_phi == 32);
  CHECK(config.n_r == 41);
  CHECK(config.slab_length == 12.0);
  CHECK(config.tolerance == 1e-9);
  CHECK(config.variant == Variant::classical);
  CHECK(config.output == "out.csv");
  const LayerSettings s = config.layer_settings();
  CHECK(s.n_eta == 121);
  CHECK(s.control.tolerance == 1e-9);
}

TEST_CASE("rejected input") {
  CHECK_THROWS_AS(parse("colour = blue"), DomainError);
  CHECK_THROWS_AS(parse("r_minus 1"), DomainError);
  CHECK_THROWS_AS(parse("n_phi = 3.5"), DomainError);
  CHECK_THROWS_AS(parse("tolerance = small"), DomainError);
  CHECK_THROWS_AS(parse("epsilon_list = 0.05, 0.1"), DomainError);
  CHECK_THROWS_AS(parse("epsilon_list = 0.1, -0.05"), DomainError);
  CHECK_THROWS_AS(parse("n_grazing = 0.6"), DomainError);
  CHECK_THROWS_AS(parse("n_grazing = 0"), DomainError);
  CHECK_THROWS_AS(parse("r_plus = 0.5"), DomainError);
  CHECK_THROWS_AS(parse("variant = spherical"), DomainError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), DomainError);
}
