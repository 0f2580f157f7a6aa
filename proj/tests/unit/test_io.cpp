#include "pedsplat/error.hpp"
#include "pedsplat/io.hpp"

#include "scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace pedsplat;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("pedsplat_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path path(const std::string& name) const { return dir_ / name; }

    void write_text(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
    }

private:
    fs::path dir_;
};

} // namespace

TEST_F(IoTest, CalibrationRoundTrips) {
    std::vector<Camera> cams;
    for (int i = 0; i < 3; ++i) cams.push_back(fixtures::ring_camera(i, 3, 5.0, 2.0, 64, 50.0));
    io::write_calibration(path("calib.json"), cams);
    const auto back = io::read_calibration(path("calib.json"));
    ASSERT_EQ(back.size(), cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        EXPECT_EQ(back[i].name, cams[i].name);
        EXPECT_EQ(back[i].intrinsics.width, 64);
        EXPECT_DOUBLE_EQ(back[i].intrinsics.fx, 50.0);
        EXPECT_TRUE(back[i].center().isApprox(cams[i].center(), 1e-12));
        const Eigen::Vector3d p(0.3, -0.2, 1.1);
        EXPECT_TRUE(project(p, back[i]).pixel.isApprox(project(p, cams[i]).pixel, 1e-9));
    }
}

TEST_F(IoTest, MalformedCalibrationIsADataError) {
    write_text("a.json", "{not json");
    write_text("b.json", R"({"views": []})");
    write_text("c.json", R"({"cameras": [{"name": "c", "fx": 1}]})");
    EXPECT_THROW(io::read_calibration(path("a.json")), DataError);
    EXPECT_THROW(io::read_calibration(path("b.json")), DataError);
    EXPECT_THROW(io::read_calibration(path("c.json")), DataError);
    EXPECT_THROW(io::read_calibration(path("missing.json")), DataError);
}

TEST_F(IoTest, DepthRoundTripsAtFloatPrecisionKeepingNaN) {
    DepthImage d(5, 3, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 + 0.1234567891 * static_cast<double>(i);
    d(2, 1) = kInvalidDepth;
    io::write_depth(path("d.f32"), d);
    const auto back = io::read_depth(path("d.f32"));
    ASSERT_EQ(back.width(), 5);
    ASSERT_EQ(back.height(), 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (std::isnan(d[i])) {
            EXPECT_TRUE(std::isnan(back[i]));
        } else {
            EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(d[i])));
        }
    }
}

TEST_F(IoTest, DepthHeaderIsChecked) {
    write_text("bad.f32", "XXXX0000");
    EXPECT_THROW(io::read_depth(path("bad.f32")), DataError);
    io::write_depth(path("ok.f32"), DepthImage(4, 4, 1.0));
    fs::resize_file(path("ok.f32"), fs::file_size(path("ok.f32")) - 4);
    EXPECT_THROW(io::read_depth(path("ok.f32")), DataError);
}

TEST_F(IoTest, ImagesRoundTrip) {
    RgbImage rgb(6, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x) rgb(x, y) = Rgb(x / 5.0, y / 3.0, 0.5);
    io::write_rgb_png(path("rgb.png"), rgb);
    const auto rgb_back = io::read_rgb_png(path("rgb.png"));
    for (std::size_t i = 0; i < rgb.size(); ++i) EXPECT_LE((rgb_back[i] - rgb[i]).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);

    LabelImage labels(6, 4, 0);
    labels(1, 1) = 3;
    labels(5, 3) = 40000;
    io::write_labels_png(path("labels.png"), labels);
    EXPECT_EQ(io::read_labels_png(path("labels.png")), labels);

    Mask m(6, 4, 0);
    m(0, 0) = 1;
    m(3, 2) = 1;
    io::write_mask_png(path("m.png"), m);
    EXPECT_EQ(io::read_mask_png(path("m.png")), m);
    EXPECT_THROW(io::read_mask_png(path("none.png")), DataError);
}

TEST_F(IoTest, GaussiansRoundTripExactly) {
    std::mt19937_64 rng(4);
    auto gs = fixtures::random_gaussians(rng, 7, Eigen::Vector3d(1, 2, 3), 0.5, 0.05, 0.2, 0.1, 0.9);
    gs[2].ped_id = 12;
    gs[5].ped_id = 0;
    io::write_gaussians(path("g.bin"), gs);
    const auto back = io::read_gaussians(path("g.bin"));
    ASSERT_EQ(back.size(), gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) {
        EXPECT_EQ(back[i].mean, gs[i].mean);
        EXPECT_EQ(back[i].log_scales, gs[i].log_scales);
        EXPECT_EQ(back[i].orientation.coeffs(), gs[i].orientation.coeffs());
        EXPECT_EQ(back[i].opacity_logit, gs[i].opacity_logit);
        EXPECT_EQ(back[i].color, gs[i].color);
        EXPECT_EQ(back[i].ped_id, gs[i].ped_id);
    }
}

TEST_F(IoTest, CsvTablesRoundTrip) {
    io::FrameDetections dets;
    dets["0"] = {{1.5, -2.25, 30, 4}, {0.0, 0.125, 12, 7}};
    dets["1"] = {};
    io::write_detections_csv(path("det.csv"), dets);
    const auto det_back = io::read_detections_csv(path("det.csv"));
    ASSERT_EQ(det_back.at("0").size(), 2u);
    EXPECT_DOUBLE_EQ(det_back.at("0")[0].x, 1.5);
    EXPECT_DOUBLE_EQ(det_back.at("0")[1].y, 0.125);
    EXPECT_EQ(det_back.at("0")[1].id, 7);

    io::FrameLocations gt;
    gt["0"] = {Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(-3, 4)};
    io::write_ground_truth_csv(path("gt.csv"), gt);
    EXPECT_EQ(io::read_ground_truth_csv(path("gt.csv")), gt);
}

TEST_F(IoTest, MalformedCsvNamesTheLine) {
    write_text("gt.csv", "frame,x,y\n0,1,2\n0,abc,3\n");
    try {
        io::read_ground_truth_csv(path("gt.csv"));
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
    write_text("short.csv", "frame,x,y\n0,1\n");
    EXPECT_THROW(io::read_ground_truth_csv(path("short.csv")), DataError);
}
