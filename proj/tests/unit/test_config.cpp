#include <cstdlib>
#include <string>

#include "doctest.h"
#include "mrlab/config.hpp"
#include "mrlab/runner.hpp"

using namespace mrlab;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_config_text(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  CHECK(parse_config_text("") == TrainConfig{});
  CHECK(parse_config_text("# only a comment\n\n   \n") == TrainConfig{});
}

TEST_CASE("serialize and parse round trip") {
  TrainConfig c;
  c.variant = VariantId::l_pmr1;
  c.dataset.kind = DatasetKind::cond_bimodal;
  c.lr = 3.14159e-4;
  c.lambda_aux = 0.1 + 0.2;
  c.hidden_widths = {7, 9};
  c.seed = 123456789012345ULL;
  c.k = 3;
  const TrainConfig back = parse_config_text(serialize_config(c));
  CHECK(back == c);
  CHECK(serialize_config(back) == serialize_config(c));
  CHECK(config_keys().size() > 30);
}

TEST_CASE("values, comments and whitespace") {
  const TrainConfig c = parse_config_text("variant = g_mr2   # trailing\n  dataset=two_delta\nhidden_widths = 8,8\n");
  CHECK(c.variant == VariantId::g_mr2);
  CHECK(c.dataset.kind == DatasetKind::two_delta);
  CHECK(c.hidden_widths == std::vector<std::size_t>{8, 8});
}

TEST_CASE("errors name the line and key") {
  CHECK(error_of("\n\nvariant = bogus\n").rfind("cfg:3:", 0) == 0);
  CHECK(error_of("frobnicate = 1\n").find("unknown key 'frobnicate'") != std::string::npos);
  CHECK(error_of("lr = 1e-3\nlr = 2e-3\n").find("cfg:2: duplicate key 'lr'") != std::string::npos);
  CHECK(error_of("lr = fast\n").find("lr") != std::string::npos);
  CHECK(error_of("just words\n").find("expected 'key = value'") != std::string::npos);
  CHECK(error_of("g_steps = -3\n").find("g_steps") != std::string::npos);
  // Validation failures point at the offending line.
  CHECK(error_of("variant = g_mr1\nK = 1\n").rfind("cfg:2: K", 0) == 0);
}

TEST_CASE("set and get single keys") {
  TrainConfig c;
  set_config_value(c, "lambda_aux", "2.5");
  CHECK(c.lambda_aux == 2.5);
  CHECK(get_config_value(c, "lambda_aux") == "2.5");
  CHECK(is_numeric_key("lambda_aux"));
  CHECK(!is_numeric_key("variant"));
  CHECK_THROWS_AS(set_config_value(c, "nope", "1"), ConfigError);
}

TEST_CASE("run id depends on the whole config") {
  TrainConfig a, b;
  CHECK(run_id(a) == run_id(b));
  CHECK(run_id(a).rfind("s0-", 0) == 0);
  CHECK(run_id(a).size() == 3 + 16);
  b.lambda_aux = 11;
  CHECK(run_id(a) != run_id(b));
  b = a;
  b.seed = 5;
  CHECK(run_id(b).rfind("s5-", 0) == 0);
}

TEST_CASE("MRLAB_SEED overrides the config seed") {
  TrainConfig c;
  c.seed = 3;
  ::unsetenv("MRLAB_SEED");
  CHECK(apply_env_seed(c).seed == 3);
  ::setenv("MRLAB_SEED", "42", 1);
  CHECK(apply_env_seed(c).seed == 42);
  ::setenv("MRLAB_SEED", "-1", 1);
  CHECK_THROWS_AS(apply_env_seed(c), ConfigError);
  ::setenv("MRLAB_SEED", "", 1);
  CHECK_THROWS_AS(apply_env_seed(c), ConfigError);
  ::unsetenv("MRLAB_SEED");
}
