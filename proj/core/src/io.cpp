#include "pedsplat/io.hpp"

#include "pedsplat/error.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pedsplat::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const fs::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("truncated file: " + path.string());
    return value;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    ensure_parent(path);
    std::ofstream out(path, mode);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void check_magic(std::istream& in, const char* magic, const fs::path& path) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw DataError(path.string() + ": bad magic, expected " + std::string(magic, 4));
    const auto version = get<std::uint32_t>(in, path);
    if (version != 1) throw DataError(path.string() + ": unsupported version " + std::to_string(version));
}

cv::Mat read_png(const fs::path& path, int flags) {
    if (!fs::exists(path)) throw DataError("missing image " + path.string());
    cv::Mat m = cv::imread(path.string(), flags);
    if (m.empty()) throw DataError("cannot decode image " + path.string());
    return m;
}

void write_png(const fs::path& path, const cv::Mat& m) {
    ensure_parent(path);
    if (!cv::imwrite(path.string(), m)) throw DataError("cannot write image " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

double to_double(const std::string& s, const fs::path& path, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

// Calls row(cells, line_number) for every data row, skipping a header line.
template <class Row>
void read_csv(const fs::path& path, std::size_t columns, Row row) {
    auto in = open_in(path);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (number == 1 && !cells.empty() && cells[0] == "frame") continue;
        if (cells.size() < columns)
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected " + std::to_string(columns) +
                            " columns");
        row(cells, number);
    }
}

} // namespace

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::vector<Camera> read_calibration(const fs::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!j.contains("cameras") || !j["cameras"].is_array()) throw DataError(path.string() + ": missing 'cameras' array");
    std::vector<Camera> cams;
    try {
        for (const auto& c : j["cameras"]) {
            Camera cam;
            cam.name = c.at("name").get<std::string>();
            cam.intrinsics = {c.at("fx").get<double>(), c.at("fy").get<double>(), c.at("cx").get<double>(),
                              c.at("cy").get<double>(),  c.at("width").get<int>(), c.at("height").get<int>()};
            const auto r = c.at("rotation").get<std::vector<double>>();
            const auto t = c.at("translation").get<std::vector<double>>();
            if (r.size() != 9 || t.size() != 3) throw DataError(path.string() + ": rotation needs 9 and translation 3 values");
            for (int i = 0; i < 9; ++i) cam.extrinsics.rotation(i / 3, i % 3) = r[i];
            cam.extrinsics.translation = Eigen::Vector3d(t[0], t[1], t[2]);
            cams.push_back(cam);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed camera entry: " + e.what());
    }
    for (const auto& cam : cams) {
        try {
            cam.validate();
        } catch (const ConfigError& e) {
            throw DataError(path.string() + ": camera '" + cam.name + "': " + e.what());
        }
    }
    return cams;
}

void write_calibration(const fs::path& path, const std::vector<Camera>& cameras) {
    nlohmann::json j;
    j["cameras"] = nlohmann::json::array();
    for (const auto& cam : cameras) {
        std::vector<double> r(9);
        for (int i = 0; i < 9; ++i) r[i] = cam.extrinsics.rotation(i / 3, i % 3);
        const auto& k = cam.intrinsics;
        const auto& t = cam.extrinsics.translation;
        j["cameras"].push_back({{"name", cam.name}, {"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                                {"width", k.width}, {"height", k.height}, {"rotation", r},
                                {"translation", {t.x(), t.y(), t.z()}}});
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

DepthImage read_depth(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    check_magic(in, "PSDF", path);
    const auto w = get<std::uint32_t>(in, path), h = get<std::uint32_t>(in, path);
    if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw DataError(path.string() + ": implausible size");
    DepthImage d(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(get<float>(in, path));
    return d;
}

void write_depth(const fs::path& path, const DepthImage& depth) {
    auto out = open_out(path, std::ios::binary);
    out.write("PSDF", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height()));
    for (std::size_t i = 0; i < depth.size(); ++i) put<float>(out, static_cast<float>(depth[i]));
}

RgbImage read_rgb_png(const fs::path& path) {
    const cv::Mat m = read_png(path, cv::IMREAD_COLOR);
    RgbImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const auto& p = m.at<cv::Vec3b>(y, x);
            img(x, y) = Rgb(p[2], p[1], p[0]) / 255.0;
        }
    return img;
}

void write_rgb_png(const fs::path& path, const RgbImage& image) {
    cv::Mat m(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const Rgb c = (image(x, y) * 255.0).array().round().max(0.0).min(255.0);
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<uchar>(c.z()), static_cast<uchar>(c.y()), static_cast<uchar>(c.x()));
        }
    write_png(path, m);
}

LabelImage read_labels_png(const fs::path& path) {
    const cv::Mat m = read_png(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
    LabelImage l(m.cols, m.rows, 0);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            l(x, y) = m.depth() == CV_16U ? m.at<std::uint16_t>(y, x) : m.at<std::uint8_t>(y, x);
    return l;
}

void write_labels_png(const fs::path& path, const LabelImage& labels) {
    cv::Mat m(labels.height(), labels.width(), CV_16UC1);
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) m.at<std::uint16_t>(y, x) = labels(x, y);
    write_png(path, m);
}

Mask read_mask_png(const fs::path& path) {
    const cv::Mat m = read_png(path, cv::IMREAD_GRAYSCALE);
    Mask mask(m.cols, m.rows, 0);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) mask(x, y) = m.at<std::uint8_t>(y, x) != 0;
    return mask;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask(x, y) ? 255 : 0;
    write_png(path, m);
}

std::vector<Gaussian3D> read_gaussians(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    check_magic(in, "PSGS", path);
    const auto count = get<std::uint64_t>(in, path);
    std::vector<Gaussian3D> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t i = 0; i < count; ++i) {
        double v[14];
        for (double& x : v) x = get<double>(in, path);
        const auto id = get<std::int32_t>(in, path);
        Gaussian3D g;
        g.mean = Eigen::Vector3d(v[0], v[1], v[2]);
        g.log_scales = Eigen::Vector3d(v[3], v[4], v[5]);
        g.orientation = Eigen::Quaterniond(v[6], v[7], v[8], v[9]);
        g.opacity_logit = v[10];
        g.color = Rgb(v[11], v[12], v[13]);
        if (id >= 0) g.ped_id = id;
        out.push_back(g);
    }
    return out;
}

void write_gaussians(const fs::path& path, const std::vector<Gaussian3D>& gaussians) {
    auto out = open_out(path, std::ios::binary);
    out.write("PSGS", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint64_t>(out, gaussians.size());
    for (const auto& g : gaussians) {
        const double v[14] = {g.mean.x(),        g.mean.y(),        g.mean.z(),        g.log_scales.x(),
                              g.log_scales.y(),  g.log_scales.z(),  g.orientation.w(), g.orientation.x(),
                              g.orientation.y(), g.orientation.z(), g.opacity_logit,   g.color.x(),
                              g.color.y(),       g.color.z()};
        for (double x : v) put<double>(out, x);
        put<std::int32_t>(out, g.ped_id ? *g.ped_id : -1);
    }
}

FrameDetections read_detections_csv(const fs::path& path) {
    FrameDetections out;
    read_csv(path, 5, [&](const std::vector<std::string>& c, int line) {
        out[c[0]].push_back({to_double(c[1], path, line), to_double(c[2], path, line), to_double(c[3], path, line),
                             static_cast<int>(to_double(c[4], path, line))});
    });
    return out;
}

void write_detections_csv(const fs::path& path, const FrameDetections& detections) {
    auto out = open_out(path);
    out.precision(10);
    out << "frame,x,y,confidence,id\n";
    for (const auto& [frame, dets] : detections)
        for (const auto& d : dets) out << frame << ',' << d.x << ',' << d.y << ',' << d.confidence << ',' << d.id << '\n';
}

FrameLocations read_ground_truth_csv(const fs::path& path) {
    FrameLocations out;
    read_csv(path, 3, [&](const std::vector<std::string>& c, int line) {
        out[c[0]].emplace_back(to_double(c[1], path, line), to_double(c[2], path, line));
    });
    return out;
}

void write_ground_truth_csv(const fs::path& path, const FrameLocations& locations) {
    auto out = open_out(path);
    out.precision(10);
    out << "frame,x,y\n";
    for (const auto& [frame, pts] : locations)
        for (const auto& p : pts) out << frame << ',' << p.x() << ',' << p.y() << '\n';
}

} // namespace pedsplat::io
