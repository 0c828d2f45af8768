#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crepe/camera.hpp"
#include "crepe/phasor.hpp"
#include "crepe/radial_supervision.hpp"

namespace crepe::harness {

// RDM1: "RDM1", u32 width, u32 height, u32 frames (little-endian), then frames*height*width
// little-endian float32 values, frame-major and row-major. Non-finite values mark invalid pixels.
std::vector<std::uint8_t> encode_rdm1(const RadialMap& map);
// Throws ParseError (with byte offset) on bad magic, truncation, or trailing bytes.
RadialMap decode_rdm1(const std::vector<std::uint8_t>& bytes);

void write_rdm1(const std::filesystem::path& path, const RadialMap& map);
RadialMap read_rdm1(const std::filesystem::path& path);

struct Rdm1Sidecar {
    std::optional<double> near_stat;
    std::string units = "meters";
    std::string source_valid_policy = "finite";
};

// Sidecar lives next to the map as <file>.json.
std::filesystem::path sidecar_path(const std::filesystem::path& rdm1_path);
void write_rdm1_sidecar(const std::filesystem::path& rdm1_path, const Rdm1Sidecar& sidecar);
std::optional<Rdm1Sidecar> read_rdm1_sidecar(const std::filesystem::path& rdm1_path);

struct Trajectory {
    UcmCamera camera;
    std::vector<RigidTransform> poses;  // camera-to-world
};

inline constexpr double kTrajectoryRotationTolerance = 1e-6;

nlohmann::json camera_to_json(const UcmCamera& cam);
// Throws ValidationError when intrinsics are out of range.
UcmCamera camera_from_json(const nlohmann::json& j);

nlohmann::json trajectory_to_json(const Trajectory& trajectory);
// Poses are 16 row-major numbers (or a 4x4 nested array). Rotations further than 1e-6 from
// orthonormal are rejected with ValidationError; accepted ones are re-projected onto SO(3).
Trajectory trajectory_from_json(const nlohmann::json& j);

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

// Coefficient tensor "CPE1": magic, u32 query_frames, u32 source_frames, u32 tokens, u32 pairs,
// then float64 (c, s) pairs ordered [query][source][token][pair], little-endian.
struct CoefficientTensor {
    std::uint32_t query_frames = 0;
    std::uint32_t source_frames = 0;
    std::uint32_t tokens = 0;
    std::uint32_t pairs = 0;
    std::vector<Phasor> values;

    const Phasor& at(std::uint32_t q, std::uint32_t s, std::uint32_t t, std::uint32_t p) const {
        return values[((static_cast<std::size_t>(q) * source_frames + s) * tokens + t) * pairs + p];
    }
};

std::vector<std::uint8_t> encode_coefficients(const CoefficientTensor& tensor);
CoefficientTensor decode_coefficients(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// Parses JSON text, mapping syntax errors to ParseError with their byte offset.
nlohmann::json parse_json(const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace crepe::harness
