#include "gg/config.hpp"

#include <gtest/gtest.h>

#include <string>

namespace gg {
namespace {

TEST(ConfigDocument, SerializeParseRoundTripIsExact) {
    ExperimentConfig a;
    a.master_seed = 18446744073709551615ull;  // u64 max survives
    a.out_dir = "runs/with spaces";
    a.targets = 17;
    a.ae1_lr = 0.1;  // no finite binary expansion
    a.rl_sigma_gamma = 0.995;
    a.ae3_beta = 1e-9;
    const std::string doc = serialize_config(a);

    ExperimentConfig b;
    apply_config_text(b, doc);
    EXPECT_EQ(serialize_config(b), doc);
    EXPECT_EQ(b.master_seed, a.master_seed);
    EXPECT_EQ(b.out_dir, a.out_dir);
    EXPECT_EQ(b.ae1_lr, a.ae1_lr);
    EXPECT_EQ(b.rl_sigma_gamma, a.rl_sigma_gamma);
    EXPECT_EQ(b.ae3_beta, a.ae3_beta);
}

TEST(ConfigDocument, CommentsAndBlankLinesAreIgnored) {
    ExperimentConfig c;
    apply_config_text(c, "\n# a comment\n  targets = 9   # trailing comment\n\nae2_lr=0.25\n");
    EXPECT_EQ(c.targets, 9);
    EXPECT_EQ(c.ae2_lr, 0.25);
}

TEST(ConfigDocument, UnknownKeysAreRejectedByName) {
    ExperimentConfig c;
    try {
        apply_config_text(c, "targets = 5\nae1_momentum = 0.9\n");
        FAIL() << "unknown key accepted";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("ae1_momentum"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    }
}

TEST(ConfigDocument, MalformedValuesNameTheKey) {
    ExperimentConfig c;
    EXPECT_THROW(apply_config_override(c, "targets=ten"), std::invalid_argument);
    EXPECT_THROW(apply_config_override(c, "ae1_lr=fast"), std::invalid_argument);
    EXPECT_THROW(apply_config_override(c, "master_seed=-3"), std::invalid_argument);
    EXPECT_THROW(apply_config_override(c, "=5"), std::invalid_argument);
    EXPECT_THROW(apply_config_override(c, "no_equals_sign"), std::invalid_argument);
    try {
        apply_config_override(c, "ae1_lr=fast");
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("ae1_lr"), std::string::npos);
    }
}

TEST(ConfigDocument, ValidationCatchesOutOfRangeValues) {
    const auto expect_invalid = [](const std::string& assignment) {
        ExperimentConfig c;
        apply_config_override(c, assignment);
        EXPECT_THROW(validate_config(c), std::invalid_argument) << assignment;
    };
    expect_invalid("targets=0");
    expect_invalid("grippers=-1");
    expect_invalid("ae1_epochs=0");
    expect_invalid("ae2_lr=0");
    expect_invalid("val_fraction=0.95");
    expect_invalid("rl_success_bar=1.5");
    expect_invalid("rl_sigma_gamma=0");
    expect_invalid("rl_sigma0_scale=-1");
    expect_invalid("adapt_seeds=0");
    expect_invalid("out_dir=");

    ExperimentConfig ok;
    EXPECT_NO_THROW(validate_config(ok));
}

TEST(ConfigDocument, LatentWidthsAreFixedByTheBuild) {
    // The keys exist so persisted configs are self-describing, but this build
    // compiles the widths in; any other value must fail fast.
    ExperimentConfig c;
    apply_config_override(c, "target_latent_dim=" + std::to_string(kTargetLatentDim));
    EXPECT_NO_THROW(validate_config(c));
    apply_config_override(c, "target_latent_dim=64");
    EXPECT_THROW(validate_config(c), std::invalid_argument);

    ExperimentConfig d;
    apply_config_override(d, "compressed_dim=47");
    EXPECT_THROW(validate_config(d), std::invalid_argument);
}

TEST(ConfigDocument, LaterAssignmentsWin) {
    ExperimentConfig c;
    apply_config_text(c, "ae1_lr = 0.01\n");
    apply_config_override(c, "ae1_lr=0.02");  // command-line layer
    EXPECT_EQ(c.ae1_lr, 0.02);
}

TEST(ConfigDocument, StageConfigsDeriveDistinctSeeds) {
    ExperimentConfig c;
    c.master_seed = 42;
    const auto t1 = ae1_train_config(c);
    const auto t2 = ae2_train_config(c);
    const auto t3 = ae3_train_config(c);
    EXPECT_NE(t1.seed, t2.seed);
    EXPECT_NE(t2.seed, t3.base.seed);
    EXPECT_NE(t1.seed, t3.base.seed);
    EXPECT_EQ(t1.seed, ae1_train_config(c).seed);  // stable

    c.ae2_stop_pose_err = 0.01;
    EXPECT_EQ(ae2_train_config(c).stop_pose_err, 0.01);

    c.rl_eta = 0.75;
    c.rl_elite_pool = 4;
    const auto g = grasp_rl_config(c);
    EXPECT_EQ(g.power.eta, 0.75);
    EXPECT_EQ(g.power.elite_pool, 4);
}

}  // namespace
}  // namespace gg
