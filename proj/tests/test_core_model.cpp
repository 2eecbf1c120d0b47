#include "octwarp/motion_model.hpp"

#include "helpers.hpp"
#include "octwarp/rng.hpp"

#include <doctest.h>

using namespace octwarp;
using octwarp::testing::random_motion;

namespace {

ScanMotion constant_motion(double tx, double ty, double tz, double shear, double alpha,
                           FastAxis axis = FastAxis::X)
{
    ScanMotion m;
    m.knot_times = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0);
    m.t_x = Eigen::VectorXd::Constant(4, tx);
    m.t_y = Eigen::VectorXd::Constant(4, ty);
    m.t_z = Eigen::VectorXd::Constant(4, tz);
    m.shear = Eigen::VectorXd::Constant(4, shear);
    m.illum = Eigen::VectorXd::Zero(4);
    m.alpha = alpha;
    m.fast_axis = axis;
    return m;
}

} // namespace

TEST_CASE("transform with zero parameters is the identity")
{
    const ScanMotion m = constant_motion(0, 0, 0, 0, 0);
    const Eigen::Vector3d out = eval_transform({3, 4, 5}, 1.3, m, 0.0);
    CHECK(out.x() == doctest::Approx(3.0));
    CHECK(out.y() == doctest::Approx(4.0));
    CHECK(out.z() == doctest::Approx(5.0));
}

TEST_CASE("transverse displacement is subtracted")
{
    const ScanMotion m = constant_motion(2, 0, 0, 0, 0);
    const Eigen::Vector3d out = eval_transform({3, 4, 5}, 0.5, m, 0.0);
    CHECK(out.x() == doctest::Approx(1.0));
    CHECK(out.y() == doctest::Approx(4.0));
    CHECK(out.z() == doctest::Approx(5.0));
}

TEST_CASE("axial shear acts on the fast-axis coordinate")
{
    const ScanMotion m = constant_motion(0, 0, 0, 0.1, 0, FastAxis::X);
    const Eigen::Vector3d out = eval_transform({10, 0, 5}, 2.0, m, 0.0);
    CHECK(out.x() == doctest::Approx(10.0));
    CHECK(out.y() == doctest::Approx(0.0));
    CHECK(out.z() == doctest::Approx(4.0));

    // Fast axis Y: the shear must act on y instead.
    const ScanMotion my = constant_motion(0, 0, 0, 0.1, 0, FastAxis::Y);
    const Eigen::Vector3d oy = eval_transform({10, 0, 5}, 2.0, my, 0.0);
    CHECK(oy.z() == doctest::Approx(5.0));
}

TEST_CASE("alpha equal to alpha0 cancels the rotation")
{
    const double a = 0.3;
    const ScanMotion m = constant_motion(0, 0, 0, 0, a);
    const Eigen::Vector3d out = eval_transform({3, -2, 7}, 1.0, m, a);
    CHECK(out.x() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out.y() == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(out.z() == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("transverse distances are preserved at fixed time")
{
    Rng rng(5);
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(10, 0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const ScanMotion m =
            random_motion(times, FastAxis::X, 3.0, 2.0, 0.05, 0.1, 0.2, rng);
        const double tau = rng.uniform(0.0, 1.0);
        const Eigen::Vector3d p1{rng.normal() * 10, rng.normal() * 10, rng.uniform(0, 60)};
        const Eigen::Vector3d p2{rng.normal() * 10, rng.normal() * 10, rng.uniform(0, 60)};
        const Eigen::Vector3d q1 = eval_transform(p1, tau, m, 0.7854);
        const Eigen::Vector3d q2 = eval_transform(p2, tau, m, 0.7854);
        const double before = (p1.head<2>() - p2.head<2>()).norm();
        const double after = (q1.head<2>() - q2.head<2>()).norm();
        CHECK(after == doctest::Approx(before).epsilon(1e-9));
    }
}

TEST_CASE("pose inverse composes to the identity")
{
    Rng rng(9);
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const ScanMotion m =
            random_motion(times, trial % 2 ? FastAxis::Y : FastAxis::X, 4.0, 3.0, 0.1, 0.1, 0.2, rng);
        const Pose pose = pose_at(m, 0.5, rng.uniform(0.0, 1.0));
        const Eigen::Vector3d p{rng.normal() * 20, rng.normal() * 20, rng.uniform(0, 100)};
        const Eigen::Vector3d round = apply_pose_inverse(pose, apply_pose(pose, p));
        CHECK(round.x() == doctest::Approx(p.x()).epsilon(1e-9));
        CHECK(round.y() == doctest::Approx(p.y()).epsilon(1e-9));
        CHECK(round.z() == doctest::Approx(p.z()).epsilon(1e-9));
    }
}

TEST_CASE("illumination model")
{
    Eigen::VectorXd knots = Eigen::VectorXd::Constant(3, 0.3);
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
    IlluminationModel model{1.0, &knots, &times};
    CHECK(eval_illumination(5.0, 0.5, model) == doctest::Approx(5.3));
    CHECK(eval_illumination(0.5, 0.5, model) == doctest::Approx(0.5));

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    IlluminationModel none{1.0, &zero, &times};
    for (double s : {0.0, 0.7, 2.5, 9.0})
        CHECK(eval_illumination(s, 0.2, none) == doctest::Approx(s));
}

TEST_CASE("retinal angle-to-distance conversion anchors")
{
    CHECK(angle_to_retina_distance(30.0) == doctest::Approx(1.6).epsilon(0.05 / 1.6));
    CHECK(angle_to_retina_distance(0.0) == doctest::Approx(0.0));
    CHECK(angle_to_retina_distance(360.0) == doctest::Approx(19.2).epsilon(0.2 / 19.2));
}
