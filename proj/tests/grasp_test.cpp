#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gg/grasp.hpp"
#include "gg/grippers.hpp"
#include "gg/rng.hpp"
#include "gg/targets.hpp"

namespace {

// Independent friction-cone check: split the inter-contact direction into
// normal and tangential parts at each contact and require tangential force
// within mu times the normal force. Equivalent to the production angle test
// (tan(theta) <= mu with positive normal component) but derived differently.
bool oracle_pair_ok(const gg::Contact& a, const gg::Contact& b) {
    const gg::Vec3 diff = b.position - a.position;
    const double len = diff.norm();
    if (len < 1e-12) return false;
    const gg::Vec3 dir = diff * (1.0 / len);
    const auto side_ok = [](const gg::Vec3& d, const gg::Contact& c) {
        const double n_comp = d.dot(c.normal);
        if (n_comp <= 0.0) return false;
        const gg::Vec3 tangential = d - c.normal * n_comp;
        return tangential.norm() <= c.mu * n_comp;
    };
    return side_ok(dir, a) && side_ok(-dir, b);
}

bool oracle_force_closure(const std::vector<gg::Contact>& contacts) {
    for (std::size_t i = 0; i < contacts.size(); ++i)
        for (std::size_t j = i + 1; j < contacts.size(); ++j)
            if (oracle_pair_ok(contacts[i], contacts[j])) return true;
    return false;
}

// Centered 6x4x6-voxel box: occupies x in [5,10], y in [6,9], z in [5,10].
gg::TargetSample box_target(double mass, double mu) {
    gg::TargetSample t = gg::generate_target({gg::ShapeFamily::box, {6, 4, 6}, 7});
    t.props.mass = mass;
    t.props.friction_mu = mu;
    return t;
}

// Flat parallel fingers, no perturbation: inner faces at x = 4 and x = 11.
gg::GripperSample flat_gripper() { return gg::generate_gripper({gg::FingertipPrimitive::flat, 0.0, 3}); }

gg::Pose identity_pose() { return gg::Pose{}; }

TEST(GraspContactTest, FlatFingersOnBoxTouchBothFaces) {
    const auto target = box_target(0.1, 0.5);
    const auto gripper = flat_gripper();
    const auto contacts = gg::extract_contacts(target, gripper, identity_pose());

    // one contact per target face voxel under a fingertip column: the box
    // cross-section (4 x 6 voxels) lies inside the fingertip footprint
    ASSERT_EQ(contacts.size(), 48u);
    const double e = target.grid.voxel_edge();
    int on_low = 0, on_high = 0;
    for (const auto& c : contacts) {
        EXPECT_DOUBLE_EQ(c.mu, 0.5);
        EXPECT_NEAR(c.normal.norm(), 1.0, 1e-15);
        EXPECT_DOUBLE_EQ(c.normal.y, 0.0);
        EXPECT_DOUBLE_EQ(c.normal.z, 0.0);
        if (c.normal.x > 0.0) {
            ++on_low;
            EXPECT_NEAR(c.position.x, 5.0 * e, 1e-12);
        } else {
            ++on_high;
            EXPECT_NEAR(c.position.x, 11.0 * e, 1e-12);
        }
    }
    EXPECT_EQ(on_low, 24);
    EXPECT_EQ(on_high, 24);
    EXPECT_TRUE(gg::force_closure(contacts));
}

TEST(GraspContactTest, FarAwayGripperMakesNoContact) {
    const auto target = box_target(0.1, 0.5);
    const auto gripper = flat_gripper();
    gg::Pose pose;
    pose.r = {0.5, 0.5, 0.5};
    EXPECT_TRUE(gg::extract_contacts(target, gripper, pose).empty());

    const auto out = gg::simulate_grasp(target, gripper, pose, 10.0);
    EXPECT_TRUE(out.valid);
    EXPECT_FALSE(out.lifted);
    EXPECT_EQ(out.contact_count, 0);
    EXPECT_DOUBLE_EQ(out.stability, 0.0);
}

TEST(GraspContactTest, DeepOverlapIsPenetration) {
    const auto target = box_target(0.1, 0.5);
    const auto gripper = flat_gripper();
    gg::Pose pose;
    pose.r = {3.0 * target.grid.voxel_edge(), 0.0, 0.0};  // finger A lands inside the box

    EXPECT_THROW(gg::extract_contacts(target, gripper, pose), gg::PenetrationError);

    const auto out = gg::simulate_grasp(target, gripper, pose, 10.0);
    EXPECT_FALSE(out.valid);
    EXPECT_FALSE(out.lifted);
    EXPECT_DOUBLE_EQ(gg::grasp_quality(out), 0.0);
}

TEST(GraspContactTest, FrictionIsCappedByFingertipMaterial) {
    const auto target = box_target(0.1, 1.4);
    const auto contacts = gg::extract_contacts(target, flat_gripper(), identity_pose());
    ASSERT_FALSE(contacts.empty());
    for (const auto& c : contacts) EXPECT_DOUBLE_EQ(c.mu, gg::kGripperMu);
}

TEST(ForceClosureTest, HandPickedFixtures) {
    const auto make = [](gg::Vec3 p, gg::Vec3 n, double mu) {
        return gg::Contact{p, n.normalized(), mu};
    };
    // perfectly opposed contacts close for any positive friction
    const gg::Contact a = make({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 0.05);
    const gg::Contact b = make({0.01, 0.0, 0.0}, {-1.0, 0.0, 0.0}, 0.05);
    EXPECT_TRUE(gg::pair_in_cones(a, b));
    EXPECT_TRUE(gg::force_closure({a, b}));

    // line 45 degrees off both normals: needs mu >= 1
    const gg::Contact c = make({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 0.99);
    const gg::Contact d = make({0.01, 0.01, 0.0}, {-1.0, 0.0, 0.0}, 0.99);
    EXPECT_FALSE(gg::pair_in_cones(c, d));
    const gg::Contact c2 = make({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.01);
    const gg::Contact d2 = make({0.01, 0.01, 0.0}, {-1.0, 0.0, 0.0}, 1.01);
    EXPECT_TRUE(gg::pair_in_cones(c2, d2));

    // same-side contacts (parallel normals) never close
    const gg::Contact e = make({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.5);
    const gg::Contact f = make({0.01, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.5);
    EXPECT_FALSE(gg::force_closure({e, f}));

    EXPECT_FALSE(gg::force_closure({}));
    EXPECT_FALSE(gg::force_closure({a}));
    EXPECT_FALSE(gg::best_antipodal_pair({e, f}).has_value());
}

TEST(ForceClosureTest, MatchesBruteForceOracleOnRandomContactSets) {
    gg::Rng rng(4242);
    int closures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 6));
        std::vector<gg::Contact> contacts;
        for (int i = 0; i < n; ++i) {
            gg::Contact c;
            c.position = {rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1)};
            gg::Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
            while (dir.norm() < 1e-6) dir = {rng.normal(), rng.normal(), rng.normal()};
            c.normal = dir.normalized();
            c.mu = rng.uniform(0.05, 1.5);
            contacts.push_back(c);
        }
        const bool got = gg::force_closure(contacts);
        ASSERT_EQ(got, oracle_force_closure(contacts)) << "trial " << trial;
        closures += got;
        // the best pair, when it exists, must itself pass both checks
        const auto pair = gg::best_antipodal_pair(contacts);
        ASSERT_EQ(pair.has_value(), got) << "trial " << trial;
        if (pair) {
            EXPECT_TRUE(gg::pair_in_cones(contacts[pair->first], contacts[pair->second]));
            EXPECT_TRUE(oracle_pair_ok(contacts[pair->first], contacts[pair->second]));
        }
    }
    // sanity: the sample hits both outcomes
    EXPECT_GT(closures, 50);
    EXPECT_LT(closures, 950);
}

TEST(LiftTest, WorkedExamples) {
    const auto gripper = flat_gripper();

    // 0.1 kg at mu 0.5, squeezing 10 N: capacity 2*0.5*10 = 10 N versus a
    // required 1.2*0.1*9.81 = 1.1772 N -> lifted
    const auto light = box_target(0.1, 0.5);
    const auto out1 = gg::simulate_grasp(light, gripper, identity_pose(), 10.0);
    EXPECT_TRUE(out1.valid);
    EXPECT_TRUE(out1.lifted);
    EXPECT_GT(out1.stability, 0.0);
    EXPECT_LE(out1.stability, 1.0);
    EXPECT_EQ(out1.contact_count, 48);

    // 1 kg at mu 0.05, squeezing 1 N: capacity 0.1 N versus 11.772 N -> slips
    const auto heavy = box_target(1.0, 0.05);
    const auto out2 = gg::simulate_grasp(heavy, gripper, identity_pose(), 1.0);
    EXPECT_TRUE(out2.valid);
    EXPECT_FALSE(out2.lifted);
    EXPECT_DOUBLE_EQ(out2.stability, 0.0);
    EXPECT_DOUBLE_EQ(gg::grasp_quality(out2), 0.1 * (1.0 - 1.0 / 50.0));

    // just either side of the capacity threshold: 2*mu*F = 1.2*m*g at
    // F = 1.1772 N for m = 0.1, mu = 0.5
    const auto out_low = gg::simulate_grasp(light, gripper, identity_pose(), 1.16);
    EXPECT_FALSE(out_low.lifted);
    const auto out_high = gg::simulate_grasp(light, gripper, identity_pose(), 1.19);
    EXPECT_TRUE(out_high.lifted);
}

TEST(LiftTest, QualityIsMonotoneInFriction) {
    const auto gripper = flat_gripper();
    double prev = -1.0;
    bool saw_lift = false, saw_slip = false;
    for (double mu = 0.05; mu <= 1.5 + 1e-9; mu += 0.05) {
        const auto target = box_target(0.2, mu);
        const auto out = gg::simulate_grasp(target, gripper, identity_pose(), 10.0);
        const double q = gg::grasp_quality(out);
        EXPECT_GE(q, prev - 1e-12) << "quality dropped at mu " << mu;
        prev = q;
        saw_lift |= out.lifted;
        saw_slip |= !out.lifted;
    }
    EXPECT_TRUE(saw_lift);
    EXPECT_TRUE(saw_slip);
}

TEST(QualityTest, WeightsAndBounds) {
    gg::GraspOutcome out;
    out.lifted = true;
    out.stability = 0.5;
    out.applied_force = 10.0;
    EXPECT_DOUBLE_EQ(gg::grasp_quality(out), 0.6 + 0.3 * 0.5 + 0.1 * (1.0 - 10.0 / 50.0));

    // a lift always scores at least 0.6; anything else stays below it
    out.stability = 0.0;
    out.applied_force = 50.0;
    EXPECT_DOUBLE_EQ(gg::grasp_quality(out), 0.6);
    out.applied_force = 120.0;  // force term saturates, never negative
    EXPECT_DOUBLE_EQ(gg::grasp_quality(out), 0.6);

    gg::GraspOutcome slip;
    slip.lifted = false;
    slip.stability = 1.0;  // not reachable from simulate_grasp, still bounded
    slip.applied_force = 0.0;
    EXPECT_DOUBLE_EQ(gg::grasp_quality(slip), 0.4);

    gg::GraspOutcome invalid;
    invalid.valid = false;
    invalid.applied_force = 0.0;
    EXPECT_DOUBLE_EQ(gg::grasp_quality(invalid), 0.0);

    gg::GraspOutcome best;
    best.lifted = true;
    best.stability = 1.0;
    best.applied_force = 0.0;
    EXPECT_DOUBLE_EQ(gg::grasp_quality(best), 1.0);
}

TEST(QualityTest, SimulateRejectsNegativeForce) {
    EXPECT_THROW(gg::simulate_grasp(box_target(0.1, 0.5), flat_gripper(), identity_pose(), -1.0),
                 std::invalid_argument);
}

TEST(GraspGeometryTest, PrincipalAxesMatchEigenvalueOracle) {
    const auto target = gg::generate_target({gg::ShapeFamily::l_bracket, {10, 8, 3, 5}, 11});
    const gg::Mat3 inertia = gg::inertia_matrix(target.grid, gg::kPlaDensity);
    const auto es = gg::symmetric_eigensystem(inertia);
    const auto ev = gg::symmetric_eigenvalues(inertia);

    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(es.values[k], ev[k], 1e-12 * std::abs(ev[2]));
        // eigenpair residual: A v = lambda v
        const gg::Vec3 av = inertia.apply(es.axes[k]);
        const gg::Vec3 lv = es.axes[k] * es.values[k];
        EXPECT_NEAR((av - lv).norm(), 0.0, 1e-10 * std::abs(ev[2]));
        EXPECT_NEAR(es.axes[k].norm(), 1.0, 1e-12);
    }
    // orthogonality
    EXPECT_NEAR(es.axes[0].dot(es.axes[1]), 0.0, 1e-12);
    EXPECT_NEAR(es.axes[0].dot(es.axes[2]), 0.0, 1e-12);
    EXPECT_NEAR(es.axes[1].dot(es.axes[2]), 0.0, 1e-12);
}

TEST(GraspGeometryTest, RotatedPoseStillFindsContacts) {
    // quarter turn about z moves the closing axis onto y; a 6-voxel cube
    // fills the rotated aperture just as the upright one fills it in x
    gg::TargetSample cube = gg::generate_target({gg::ShapeFamily::box, {6, 6, 6}, 7});
    cube.props.mass = 0.1;
    cube.props.friction_mu = 0.5;
    const auto gripper = flat_gripper();
    gg::Pose pose;
    pose.q = gg::Quat::from_axis_angle({0, 0, 1}, M_PI / 2.0);
    const auto contacts = gg::extract_contacts(cube, gripper, pose);
    ASSERT_FALSE(contacts.empty());
    for (const auto& c : contacts) {
        EXPECT_NEAR(std::abs(c.normal.y), 1.0, 1e-9);
        EXPECT_NEAR(std::abs(c.normal.x), 0.0, 1e-9);
    }
    EXPECT_TRUE(gg::force_closure(contacts));
    const auto out = gg::simulate_grasp(cube, gripper, pose, 10.0);
    EXPECT_TRUE(out.lifted);
}

}  // namespace
