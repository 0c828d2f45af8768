#include "crepe/harness/formats.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "crepe/errors.hpp"

namespace crepe::harness {

namespace {

constexpr char kRdm1Magic[4] = {'R', 'D', 'M', '1'};
constexpr char kCoeffMagic[4] = {'C', 'P', 'E', '1'};

template <typename UInt>
void put_le(std::vector<std::uint8_t>& out, UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

template <typename UInt>
UInt get_le(const std::vector<std::uint8_t>& in, std::size_t offset) {
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        v |= static_cast<UInt>(in[offset + i]) << (8 * i);
    }
    return v;
}

void expect_magic(const std::vector<std::uint8_t>& bytes, const char (&magic)[4], const char* what) {
    if (bytes.size() < 4) {
        throw ParseError(std::string(what) + ": file shorter than its magic", bytes.size());
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (bytes[i] != static_cast<std::uint8_t>(magic[i])) {
            throw ParseError(std::string(what) + ": bad magic", i);
        }
    }
}

void expect_size(const std::vector<std::uint8_t>& bytes, std::size_t expected, const char* what) {
    if (bytes.size() < expected) {
        throw ParseError(std::string(what) + ": truncated payload, expected " + std::to_string(expected) +
                             " bytes",
                         bytes.size());
    }
    if (bytes.size() > expected) {
        throw ParseError(std::string(what) + ": trailing bytes after payload", expected);
    }
}

}  // namespace

std::vector<std::uint8_t> encode_rdm1(const RadialMap& map) {
    if (map.values.size() != static_cast<std::size_t>(map.frames) * map.height * map.width ||
        map.source_valid.size() != map.values.size()) {
        throw InputError("encode_rdm1: map buffers do not match its dimensions");
    }
    std::vector<std::uint8_t> out;
    out.reserve(16 + 4 * map.values.size());
    out.insert(out.end(), std::begin(kRdm1Magic), std::end(kRdm1Magic));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.width));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.height));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.frames));
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const float raw = map.values[i];
        const float v = (map.source_valid[i] != 0 || !std::isfinite(raw)) ? raw : nan;
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

RadialMap decode_rdm1(const std::vector<std::uint8_t>& bytes) {
    expect_magic(bytes, kRdm1Magic, "RDM1");
    if (bytes.size() < 16) {
        throw ParseError("RDM1: truncated header", bytes.size());
    }
    const auto width = get_le<std::uint32_t>(bytes, 4);
    const auto height = get_le<std::uint32_t>(bytes, 8);
    const auto frames = get_le<std::uint32_t>(bytes, 12);
    if (width == 0) throw ParseError("RDM1: zero width", 4);
    if (height == 0) throw ParseError("RDM1: zero height", 8);
    if (frames == 0) throw ParseError("RDM1: zero frames", 12);
    const std::uint64_t count = static_cast<std::uint64_t>(width) * height * frames;
    if (count > (std::numeric_limits<std::size_t>::max() - 16) / 4) {
        throw ParseError("RDM1: dimensions overflow", 4);
    }
    expect_size(bytes, 16 + 4 * static_cast<std::size_t>(count), "RDM1");

    RadialMap map(static_cast<int>(frames), static_cast<int>(height), static_cast<int>(width));
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const float v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, 16 + 4 * i));
        map.values[i] = v;
        map.source_valid[i] = std::isfinite(v) ? 1 : 0;
    }
    return map;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << text;
}

void write_rdm1(const std::filesystem::path& path, const RadialMap& map) { write_bytes(path, encode_rdm1(map)); }

RadialMap read_rdm1(const std::filesystem::path& path) { return decode_rdm1(read_bytes(path)); }

std::filesystem::path sidecar_path(const std::filesystem::path& rdm1_path) {
    return std::filesystem::path(rdm1_path.string() + ".json");
}

void write_rdm1_sidecar(const std::filesystem::path& rdm1_path, const Rdm1Sidecar& sidecar) {
    nlohmann::json j;
    j["near_stat"] = sidecar.near_stat ? nlohmann::json(*sidecar.near_stat) : nlohmann::json(nullptr);
    j["units"] = sidecar.units;
    j["source_valid_policy"] = sidecar.source_valid_policy;
    write_text(sidecar_path(rdm1_path), j.dump(2) + "\n");
}

std::optional<Rdm1Sidecar> read_rdm1_sidecar(const std::filesystem::path& rdm1_path) {
    const auto path = sidecar_path(rdm1_path);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    const nlohmann::json j = read_json(path);
    Rdm1Sidecar s;
    if (j.contains("near_stat") && !j["near_stat"].is_null()) {
        s.near_stat = j["near_stat"].get<double>();
        if (!(*s.near_stat > 0.0)) {
            throw ValidationError("RDM1 sidecar: near_stat must be positive");
        }
    }
    s.units = j.value("units", s.units);
    s.source_valid_policy = j.value("source_valid_policy", s.source_valid_policy);
    return s;
}

nlohmann::json parse_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("JSON: ") + e.what(), e.byte);
    }
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return parse_json(std::string(bytes.begin(), bytes.end()));
}

nlohmann::json camera_to_json(const UcmCamera& cam) {
    return {{"fx", cam.fx()}, {"fy", cam.fy()}, {"cx", cam.cx()},       {"cy", cam.cy()},
            {"xi", cam.xi()}, {"width", cam.width()}, {"height", cam.height()}};
}

UcmCamera camera_from_json(const nlohmann::json& j) {
    try {
        return UcmCamera(j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                         j.at("cy").get<double>(), j.at("xi").get<double>(), j.at("width").get<int>(),
                         j.at("height").get<int>());
    } catch (const InputError& e) {
        throw ValidationError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("camera block: ") + e.what());
    }
}

nlohmann::json trajectory_to_json(const Trajectory& trajectory) {
    nlohmann::json poses = nlohmann::json::array();
    for (const auto& pose : trajectory.poses) {
        nlohmann::json m = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m.push_back(pose.rotation()(r, c));
            }
            m.push_back(pose.translation()(r));
        }
        for (double v : {0.0, 0.0, 0.0, 1.0}) {
            m.push_back(v);
        }
        poses.push_back(std::move(m));
    }
    return {{"camera", camera_to_json(trajectory.camera)}, {"poses", std::move(poses)}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("camera") || !j.contains("poses") || !j["poses"].is_array()) {
        throw ValidationError("trajectory: expected an object with 'camera' and 'poses'");
    }
    Trajectory t{camera_from_json(j["camera"]), {}};
    if (j["poses"].empty()) {
        throw ValidationError("trajectory: no poses");
    }
    std::size_t index = 0;
    for (const auto& pj : j["poses"]) {
        std::vector<double> flat;
        try {
            if (pj.size() == 4 && pj[0].is_array()) {
                for (const auto& row : pj) {
                    for (const auto& v : row) flat.push_back(v.get<double>());
                }
            } else {
                for (const auto& v : pj) flat.push_back(v.get<double>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("trajectory pose " + std::to_string(index) + ": " + e.what());
        }
        if (flat.size() != 16) {
            throw ValidationError("trajectory pose " + std::to_string(index) + ": expected 16 values");
        }
        Eigen::Matrix3d r;
        Eigen::Vector3d tr;
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) {
                r(row, col) = flat[static_cast<std::size_t>(4 * row + col)];
            }
            tr(row) = flat[static_cast<std::size_t>(4 * row + 3)];
        }
        if (flat[12] != 0.0 || flat[13] != 0.0 || flat[14] != 0.0 || flat[15] != 1.0) {
            throw ValidationError("trajectory pose " + std::to_string(index) + ": last row must be [0, 0, 0, 1]");
        }
        const double err = orthonormality_error(r);
        if (!(err <= kTrajectoryRotationTolerance)) {
            throw ValidationError("trajectory pose " + std::to_string(index) +
                                  ": rotation not orthonormal (deviation " + std::to_string(err) + ")");
        }
        if (!tr.allFinite()) {
            throw ValidationError("trajectory pose " + std::to_string(index) + ": non-finite translation");
        }
        t.poses.emplace_back(project_to_rotation(r), tr);
        ++index;
    }
    return t;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
    write_text(path, trajectory_to_json(trajectory).dump(2) + "\n");
}

Trajectory read_trajectory(const std::filesystem::path& path) { return trajectory_from_json(read_json(path)); }

std::vector<std::uint8_t> encode_coefficients(const CoefficientTensor& tensor) {
    const std::size_t n = static_cast<std::size_t>(tensor.query_frames) * tensor.source_frames * tensor.tokens * tensor.pairs;
    if (tensor.values.size() != n) {
        throw InputError("encode_coefficients: value count does not match the header");
    }
    std::vector<std::uint8_t> out;
    out.reserve(20 + 16 * n);
    out.insert(out.end(), std::begin(kCoeffMagic), std::end(kCoeffMagic));
    put_le<std::uint32_t>(out, tensor.query_frames);
    put_le<std::uint32_t>(out, tensor.source_frames);
    put_le<std::uint32_t>(out, tensor.tokens);
    put_le<std::uint32_t>(out, tensor.pairs);
    for (const auto& p : tensor.values) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p.c));
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p.s));
    }
    return out;
}

CoefficientTensor decode_coefficients(const std::vector<std::uint8_t>& bytes) {
    expect_magic(bytes, kCoeffMagic, "CPE1");
    if (bytes.size() < 20) {
        throw ParseError("CPE1: truncated header", bytes.size());
    }
    CoefficientTensor t;
    t.query_frames = get_le<std::uint32_t>(bytes, 4);
    t.source_frames = get_le<std::uint32_t>(bytes, 8);
    t.tokens = get_le<std::uint32_t>(bytes, 12);
    t.pairs = get_le<std::uint32_t>(bytes, 16);
    const std::size_t n = static_cast<std::size_t>(t.query_frames) * t.source_frames * t.tokens * t.pairs;
    expect_size(bytes, 20 + 16 * n, "CPE1");
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.values[i].c = std::bit_cast<double>(get_le<std::uint64_t>(bytes, 20 + 16 * i));
        t.values[i].s = std::bit_cast<double>(get_le<std::uint64_t>(bytes, 28 + 16 * i));
    }
    return t;
}

}  // namespace crepe::harness
