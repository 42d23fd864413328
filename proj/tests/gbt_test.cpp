#include "psrec/gbt.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "psrec/model_io.hpp"
#include "test_util.hpp"

namespace {

using psrec::ChecksumError;
using psrec::ClassCode;
using psrec::DimensionError;
using psrec::DomainError;
using psrec::FeatureScaler;
using psrec::FeatureVector;
using psrec::GbtModel;
using psrec::GranularModel;
using psrec::LabeledSample;
using psrec::LevelEnsemble;
using psrec::ModelIoError;
using psrec::ObjectClass;
using psrec::ParseError;
using psrec::TrainConfig;
using psrec::TrainedSvm;
using psrec::TrainingError;
using psrec::TruncatedError;
using psrec::VersionError;

TEST(ClassCodes, TwoBitTable) {
  struct Row {
    ObjectClass c;
    int label1, label2, decision;
  };
  const Row rows[] = {
      {ObjectClass::BrightPs, 1, 0, 1},
      {ObjectClass::BrightBkg, 1, 1, 0},
      {ObjectClass::FaintPs, 0, 1, 1},
      {ObjectClass::FaintBkg, 0, 0, 0},
  };
  for (const Row& r : rows) {
    EXPECT_EQ(psrec::label1_of(r.c), r.label1);
    EXPECT_EQ(psrec::label2_of(r.c), r.label2);
    const ClassCode code = psrec::code_from_labels(r.label1, r.label2);
    EXPECT_EQ(code.object_class, r.c);
    EXPECT_EQ(code.decision, r.decision);
    EXPECT_EQ(code.decision, r.label1 ^ r.label2);
    EXPECT_EQ(psrec::is_point_source(r.c), r.decision == 1);
  }
  EXPECT_THROW(psrec::code_from_labels(2, 0), DomainError);
  EXPECT_THROW(psrec::code_from_labels(0, -1), DomainError);
}

TEST(ClassCodes, NameRoundTrip) {
  for (ObjectClass c : {ObjectClass::BrightPs, ObjectClass::BrightBkg, ObjectClass::FaintPs,
                        ObjectClass::FaintBkg}) {
    EXPECT_EQ(psrec::object_class_from_string(psrec::to_string(c)), c);
  }
  EXPECT_THROW(psrec::object_class_from_string("no_such_class"), ParseError);
}

TrainedSvm constant_model(double bias) { return TrainedSvm({}, {}, bias, 1.0); }

LevelEnsemble constant_level(double bias, int positive_bit, std::size_t dim) {
  GranularModel model({constant_model(bias)},
                      FeatureScaler(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)),
                      "tag");
  return LevelEnsemble{std::move(model), positive_bit};
}

FeatureVector probe_fv(std::size_t nbins) {
  FeatureVector fv;
  fv.spec.assign(nbins, 0.0);
  return fv;
}

TEST(GbtModel, RoutingAndXorWithFixedVotes) {
  const std::size_t dim = 6;  // nbins = 2
  struct Case {
    double v1, v2l, v2r;
    ObjectClass expected;
  };
  const Case cases[] = {
      {+1.0, +1.0, -1.0, ObjectClass::BrightBkg},
      {+1.0, -1.0, +1.0, ObjectClass::BrightPs},
      {-1.0, -1.0, +1.0, ObjectClass::FaintPs},
      {-1.0, +1.0, -1.0, ObjectClass::FaintBkg},
  };
  for (const Case& c : cases) {
    const GbtModel model(constant_level(c.v1, 1, dim), constant_level(c.v2l, 1, dim),
                         constant_level(c.v2r, 1, dim), 2);
    const ClassCode code = model.classify(probe_fv(2));
    EXPECT_EQ(code.object_class, c.expected);
    EXPECT_EQ(code.decision, code.label1 ^ code.label2);
  }
}

TEST(GbtModel, PositiveBitInvertsVoteMeaning) {
  const std::size_t dim = 6;
  // Same +1 votes everywhere, but level-1's +1 now means the faint group.
  const GbtModel model(constant_level(+1.0, 0, dim), constant_level(+1.0, 1, dim),
                       constant_level(+1.0, 1, dim), 2);
  const ClassCode code = model.classify(probe_fv(2));
  EXPECT_EQ(code.label1, 0);
  EXPECT_EQ(code.object_class, ObjectClass::FaintPs);
}

TEST(GbtModel, ConstructorValidation) {
  EXPECT_THROW(GbtModel(constant_level(1.0, 1, 6), constant_level(1.0, 1, 7),
                        constant_level(1.0, 1, 6), 2),
               DimensionError);
  EXPECT_THROW(GbtModel(constant_level(1.0, 1, 6), constant_level(1.0, 1, 6),
                        constant_level(1.0, 1, 6), 3),
               DimensionError);
  EXPECT_THROW(GbtModel(constant_level(1.0, 2, 6), constant_level(1.0, 1, 6),
                        constant_level(1.0, 1, 6), 2),
               DomainError);
  EXPECT_THROW(GbtModel(constant_level(1.0, 1, 6), constant_level(1.0, 1, 6),
                        constant_level(1.0, 1, 6), 0),
               DomainError);
}

// Four well-separated clusters in the two spectrum coordinates; the other
// feature slots carry mild noise so no dimension is degenerate.
FeatureVector cluster_fv(std::mt19937_64& rng, double c0, double c1) {
  std::normal_distribution<double> noise(0.0, 0.4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureVector fv;
  fv.spec = {c0 + noise(rng), c1 + noise(rng)};
  fv.cpp = u(rng);
  fv.par = u(rng);
  fv.var = u(rng);
  fv.nop = static_cast<int>(rng() % 3);
  return fv;
}

std::vector<LabeledSample> four_cluster_data(std::mt19937_64& rng, int n_bps, int n_bbk,
                                             int n_fps, int n_fbk) {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < n_bps; ++i)
    samples.push_back({cluster_fv(rng, 3.0, 3.0), ObjectClass::BrightPs});
  for (int i = 0; i < n_bbk; ++i)
    samples.push_back({cluster_fv(rng, 3.0, -3.0), ObjectClass::BrightBkg});
  for (int i = 0; i < n_fps; ++i)
    samples.push_back({cluster_fv(rng, -3.0, 3.0), ObjectClass::FaintPs});
  for (int i = 0; i < n_fbk; ++i)
    samples.push_back({cluster_fv(rng, -3.0, -3.0), ObjectClass::FaintBkg});
  return samples;
}

TrainConfig fast_cfg() {
  TrainConfig cfg;
  cfg.c = 5.0;
  cfg.max_passes = 2000;
  return cfg;
}

TEST(TrainGbt, LearnsFourSeparableClusters) {
  std::mt19937_64 rng(101);
  const auto samples = four_cluster_data(rng, 8, 20, 10, 40);
  const GbtModel model = psrec::train_gbt(samples, fast_cfg());

  // Submodel counts follow the class imbalance at each level:
  // level 1: faint 50 vs bright 28 -> 1 granule; left: 20 vs 8 -> 2;
  // right: 40 vs 10 -> 4.
  EXPECT_EQ(model.level1().model.submodels().size(), 1u);
  EXPECT_EQ(model.level2_left().model.submodels().size(), 2u);
  EXPECT_EQ(model.level2_right().model.submodels().size(), 4u);
  EXPECT_EQ(model.total_submodels(), 7);

  // Minority bookkeeping: bright group is the level-1 minority (bit 1);
  // bright_ps the left minority (bit 0); faint_ps the right minority (bit 1).
  EXPECT_EQ(model.level1().positive_bit, 1);
  EXPECT_EQ(model.level1().model.positive_label_meaning(), "bright_group");
  EXPECT_EQ(model.level2_left().positive_bit, 0);
  EXPECT_EQ(model.level2_left().model.positive_label_meaning(), "bright_ps");
  EXPECT_EQ(model.level2_right().positive_bit, 1);
  EXPECT_EQ(model.level2_right().model.positive_label_meaning(), "faint_ps");

  for (const LabeledSample& s : samples) {
    const ClassCode code = model.classify(s.features);
    EXPECT_EQ(code.object_class, s.object_class);
    EXPECT_EQ(code.decision, psrec::is_point_source(s.object_class) ? 1 : 0);
  }
}

TEST(TrainGbt, EqualCountsMakeBitOneClassTheMinority) {
  std::mt19937_64 rng(103);
  const auto samples = four_cluster_data(rng, 6, 6, 6, 6);
  const GbtModel model = psrec::train_gbt(samples, fast_cfg());
  EXPECT_EQ(model.level1().positive_bit, 1);
  EXPECT_EQ(model.level2_left().positive_bit, 1);
  EXPECT_EQ(model.level2_left().model.positive_label_meaning(), "bright_bkg");
  EXPECT_EQ(model.level2_right().positive_bit, 1);
}

TEST(TrainGbt, MissingClassIsNamedInError) {
  std::mt19937_64 rng(107);
  auto samples = four_cluster_data(rng, 5, 5, 0, 5);
  try {
    psrec::train_gbt(samples, fast_cfg());
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("faint_ps"), std::string::npos) << e.what();
  }
  EXPECT_THROW(psrec::train_gbt({}, fast_cfg()), TrainingError);
}

TEST(TrainGbt, PerLevelConfigsAreRespected) {
  std::mt19937_64 rng(109);
  const auto samples = four_cluster_data(rng, 6, 12, 6, 12);
  psrec::GbtTrainConfig cfg = psrec::GbtTrainConfig::shared(fast_cfg());
  cfg.level1.gamma = 0.125;
  cfg.level2_left.gamma = 0.25;
  cfg.level2_right.gamma = 0.5;
  const GbtModel model = psrec::train_gbt(samples, cfg);
  for (const TrainedSvm& m : model.level1().model.submodels()) EXPECT_DOUBLE_EQ(m.gamma(), 0.125);
  for (const TrainedSvm& m : model.level2_left().model.submodels())
    EXPECT_DOUBLE_EQ(m.gamma(), 0.25);
  for (const TrainedSvm& m : model.level2_right().model.submodels())
    EXPECT_DOUBLE_EQ(m.gamma(), 0.5);
}

class ModelPersistence : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::mt19937_64 rng(113);
    samples_ = new std::vector<LabeledSample>(four_cluster_data(rng, 8, 16, 9, 27));
    model_ = new GbtModel(psrec::train_gbt(*samples_, fast_cfg()));
  }
  static void TearDownTestSuite() {
    delete samples_;
    delete model_;
    samples_ = nullptr;
    model_ = nullptr;
  }
  static std::vector<LabeledSample>* samples_;
  static GbtModel* model_;
};

std::vector<LabeledSample>* ModelPersistence::samples_ = nullptr;
GbtModel* ModelPersistence::model_ = nullptr;

TEST_F(ModelPersistence, SerializedTextRoundTripsByteForByte) {
  const std::string text = psrec::serialize_model(*model_);
  const GbtModel loaded = psrec::deserialize_model(text);
  EXPECT_EQ(psrec::serialize_model(loaded), text);
}

TEST_F(ModelPersistence, LoadedModelClassifiesIdentically) {
  const GbtModel loaded = psrec::deserialize_model(psrec::serialize_model(*model_));
  EXPECT_EQ(loaded.nbins(), model_->nbins());
  EXPECT_EQ(loaded.total_submodels(), model_->total_submodels());
  std::mt19937_64 rng(127);
  for (int i = 0; i < 50; ++i) {
    const FeatureVector fv = cluster_fv(rng, (i % 2) ? 3.0 : -3.0, (i % 4 < 2) ? 3.0 : -3.0);
    const ClassCode a = model_->classify(fv);
    const ClassCode b = loaded.classify(fv);
    EXPECT_EQ(a.object_class, b.object_class);
    EXPECT_EQ(a.label1, b.label1);
    EXPECT_EQ(a.label2, b.label2);
  }
}

TEST_F(ModelPersistence, FileSaveAndLoad) {
  const auto path = testutil::scratch_dir() / "model_roundtrip.txt";
  psrec::save_model(*model_, path);
  const GbtModel loaded = psrec::load_model(path);
  EXPECT_EQ(psrec::serialize_model(loaded), psrec::serialize_model(*model_));
  EXPECT_THROW(psrec::load_model(testutil::scratch_dir() / "no_such_model.txt"), ModelIoError);
}

TEST_F(ModelPersistence, WrongVersionIsVersionError) {
  std::string text = psrec::serialize_model(*model_);
  std::string v2 = text;
  v2.replace(v2.find("v1"), 2, "v2");
  EXPECT_THROW(psrec::deserialize_model(v2), VersionError);
  EXPECT_THROW(psrec::deserialize_model("SOMETHING ELSE\n"), VersionError);
  // The version gate outranks every later corruption.
  std::string v2_truncated = v2.substr(0, v2.size() / 2);
  EXPECT_THROW(psrec::deserialize_model(v2_truncated), VersionError);
}

TEST_F(ModelPersistence, CorruptedByteIsChecksumError) {
  std::string text = psrec::serialize_model(*model_);
  const std::size_t pos = text.find("granules");
  ASSERT_NE(pos, std::string::npos);
  text[pos] = 'G';
  EXPECT_THROW(psrec::deserialize_model(text), ChecksumError);
}

TEST_F(ModelPersistence, ForgedChecksumLineIsChecksumError) {
  std::string text = psrec::serialize_model(*model_);
  const std::size_t pos = text.rfind("checksum ");
  text[pos + 9] = (text[pos + 9] == '0') ? '1' : '0';
  EXPECT_THROW(psrec::deserialize_model(text), ChecksumError);
}

TEST_F(ModelPersistence, TruncationIsTruncatedError) {
  const std::string text = psrec::serialize_model(*model_);
  EXPECT_THROW(psrec::deserialize_model(text.substr(0, text.size() / 2)), TruncatedError);
  EXPECT_THROW(psrec::deserialize_model("GBTSVM v1"), TruncatedError);  // no newline at all
  // Body intact but checksum line removed.
  const std::size_t pos = text.rfind("checksum ");
  EXPECT_THROW(psrec::deserialize_model(text.substr(0, pos)), TruncatedError);
}

TEST_F(ModelPersistence, TrailingGarbageIsRejected) {
  const std::string text = psrec::serialize_model(*model_);
  EXPECT_ANY_THROW(psrec::deserialize_model(text + "extra junk\n"));
}

TEST_F(ModelPersistence, DimNbinsMismatchIsRejected) {
  std::string text = psrec::serialize_model(*model_);
  const std::size_t pos = text.find("nbins 2");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 7, "nbins 3");
  // Re-stamp a valid checksum so only the semantic check can fire.
  const std::size_t sum_pos = text.rfind("checksum ");
  std::string body = text.substr(0, sum_pos);
  char sum[32];
  std::snprintf(sum, sizeof(sum), "checksum %016llx\n",
                static_cast<unsigned long long>(psrec::detail::fnv1a64(body)));
  EXPECT_THROW(psrec::deserialize_model(body + sum), ParseError);
}

}  // namespace
