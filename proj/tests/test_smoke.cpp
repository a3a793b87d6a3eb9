// Library-wide compile and sanity smoke check.

#include <wbc/wbc.hpp>

#include <gtest/gtest.h>

TEST(Smoke, BuiltinModelValidates) {
  const wbc::RobotModel model = wbc::RobotModel::builtin_panda_base();
  EXPECT_NO_THROW(model.validate());
  EXPECT_EQ(model.dof(), 9);
  EXPECT_EQ(model.arm_dof(), 7);
}

TEST(Smoke, ControllerConstructs) {
  const wbc::RobotModel model = wbc::RobotModel::builtin_panda_base();
  wbc::ControllerParams params;
  EXPECT_NO_THROW(wbc::Controller(model, params));
}
