#include "imukit/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace imukit {
namespace {

TEST(Config, ParsesScalarsStringsAndArrays) {
  std::istringstream in(R"(
# top level
masks = [[0.5, 1.5], [10.0, 12.5]]
name = "run-a"
flag = true

[calib]
lr = 1e-3            # learn rate
weight_decay = 1e-4
epochs = 250
huber_delta = 0.1
loss_weights = [1.0, 1.0, 1.0]
epsilon = 0.001

[solve]
lambda0 = 1e-4
max_iters = 100
cost_tol = 1e-9
step_tol = 1e-10
)");
  const TomlTable t = parse_toml(in);
  EXPECT_EQ(t.at("name").str, "run-a");
  EXPECT_TRUE(t.at("flag").boolean);
  EXPECT_DOUBLE_EQ(t.at("calib.lr").number, 1e-3);

  const AppConfig cfg = app_config_from_table(t);
  EXPECT_DOUBLE_EQ(cfg.calib.lr, 1e-3);
  EXPECT_DOUBLE_EQ(cfg.calib.weight_decay, 1e-4);
  EXPECT_EQ(cfg.calib.epochs, 250);
  EXPECT_DOUBLE_EQ(cfg.calib.huber_delta, 0.1);
  EXPECT_DOUBLE_EQ(cfg.calib.epsilon, 0.001);
  EXPECT_DOUBLE_EQ(cfg.solve.lambda0, 1e-4);
  EXPECT_EQ(cfg.solve.max_iters, 100);
  ASSERT_EQ(cfg.masks.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.masks[0][0], 0.5);
  EXPECT_DOUBLE_EQ(cfg.masks[1][1], 12.5);
}

TEST(Config, DefaultsWhenKeysAbsent) {
  std::istringstream in("[calib]\nlr = 0.01\n");
  const AppConfig cfg = app_config_from_table(parse_toml(in));
  EXPECT_DOUBLE_EQ(cfg.calib.lr, 0.01);
  EXPECT_DOUBLE_EQ(cfg.calib.weight_decay, 1e-4);  // default kept
  EXPECT_EQ(cfg.solve.max_iters, 100);
  EXPECT_TRUE(cfg.masks.empty());
}

TEST(Config, MalformedInputsThrow) {
  {
    std::istringstream in("calib lr = 3\n");
    EXPECT_THROW(parse_toml(in), std::runtime_error);
  }
  {
    std::istringstream in("x = [1, 2\n");
    EXPECT_THROW(parse_toml(in), std::runtime_error);
  }
  {
    std::istringstream in("x = abc\n");
    EXPECT_THROW(parse_toml(in), std::runtime_error);
  }
  {
    std::istringstream in("masks = [1.0, 2.0]\n");
    EXPECT_THROW(app_config_from_table(parse_toml(in)), std::runtime_error);
  }
  {
    std::istringstream in("[calib]\nloss_weights = [1.0, 2.0]\n");
    EXPECT_THROW(app_config_from_table(parse_toml(in)), std::runtime_error);
  }
}

TEST(Config, MissingFileThrows) {
  EXPECT_THROW(load_app_config("/nonexistent/imukit.toml"), std::runtime_error);
}

}  // namespace
}  // namespace imukit
