#include <gtest/gtest.h>

#include <fstream>

#include "fsnt/error.hpp"
#include "fsnt/model_io.hpp"
#include "fsnt/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace fsnt;

namespace {

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode load_error(const std::string& path) {
    try {
        load_model(path);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "load succeeded";
    return ErrorCode::InvalidArgument;
}

// Model trained behind standardization and a 4-component PCA.
TrainedModel trained(EstimatorKind kind) {
    const auto raw = fixture::blobs(40, 6, 1.5, 17);
    PipelineOptions opts;
    opts.pca_components = 4;
    const auto prepared = prepare_data(raw, opts);
    EstimatorSpec spec{kind, {}, 5};
    if (kind == EstimatorKind::RF) spec.hyperparameters["trees"] = 8;
    if (kind == EstimatorKind::GBT) spec.hyperparameters["rounds"] = 8;
    return train_and_evaluate(spec, prepared).model;
}

}  // namespace

TEST(ModelIo, RoundtripIsBitIdenticalForAllKinds) {
    fixture::TempDir tmp;
    for (const auto kind : kAllKinds) {
        const auto m = trained(kind);
        const auto path = tmp.file(std::string(kind_name(kind)) + ".fsnt");
        save_model(m, path);
        const auto back = load_model(path);
        EXPECT_EQ(back.kind(), kind);
        EXPECT_EQ(back.spec().seed, m.spec().seed);
        EXPECT_EQ(back.spec().hyperparameters, m.spec().hyperparameters);
        ASSERT_TRUE(back.metadata().evaluation.has_value());
        EXPECT_EQ(back.metadata().evaluation->accuracy, m.metadata().evaluation->accuracy);
        EXPECT_EQ(serialize_model(back), serialize_model(m));
        EXPECT_EQ(model_fingerprint(back), model_fingerprint(m));

        Rng rng(static_cast<std::uint64_t>(kind) + 1);
        for (int i = 0; i < 1000; ++i) {
            const auto x = fixture::random_vector(6, rng, 8.0);
            ASSERT_EQ(back.predict_proba(x), m.predict_proba(x)) << kind_name(kind);
            ASSERT_EQ(back.predict(x), m.predict(x));
        }
    }
}

TEST(ModelIo, HeaderLayout) {
    const auto bytes = serialize_model(trained(EstimatorKind::DT));
    ASSERT_GT(bytes.size(), 20u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FSNT");
    EXPECT_EQ(bytes[4], kModelFormatVersion);
    EXPECT_EQ(bytes[8], static_cast<std::uint8_t>(EstimatorKind::DT));
}

TEST(ModelIo, CorruptionIsDetected) {
    fixture::TempDir tmp;
    const auto bytes = serialize_model(trained(EstimatorKind::RF));
    const auto path = tmp.file("m.fsnt");

    write_bytes(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2)));
    EXPECT_EQ(load_error(path), ErrorCode::CorruptFile);

    write_bytes(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 6));
    EXPECT_EQ(load_error(path), ErrorCode::CorruptFile);

    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    write_bytes(path, flipped);
    EXPECT_EQ(load_error(path), ErrorCode::CorruptFile);

    auto bumped = bytes;
    bumped[4] += 1;
    write_bytes(path, bumped);
    EXPECT_EQ(load_error(path), ErrorCode::VersionMismatch);

    auto magic = bytes;
    magic[0] = 'X';
    write_bytes(path, magic);
    EXPECT_EQ(load_error(path), ErrorCode::CorruptFile);

    EXPECT_EQ(load_error(tmp.file("missing.fsnt")), ErrorCode::IoFailure);
}

TEST(ModelIo, EveryTruncationIsRejected) {
    const auto bytes = serialize_model(trained(EstimatorKind::LR));
    for (std::size_t cut = 0; cut < bytes.size(); cut += 7) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        EXPECT_THROW(deserialize_model(part), Error) << "cut " << cut;
    }
}

TEST(ModelIo, SavedFileMatchesSerializedBytes) {
    fixture::TempDir tmp;
    const auto m = trained(EstimatorKind::NB);
    save_model(m, tmp.file("nb.fsnt"));
    EXPECT_EQ(read_bytes(tmp.file("nb.fsnt")), serialize_model(m));
}
