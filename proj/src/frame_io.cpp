#include "rofusion/frame_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rofusion/errors.hpp"
#include "rofusion/rng.hpp"

namespace rofusion::io {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "rofusion-frame/1";

json box_to_json(const BBox2D& b) {
    json j;
    j["u_min"] = b.u_min;
    j["v_min"] = b.v_min;
    j["u_max"] = b.u_max;
    j["v_max"] = b.v_max;
    if (b.object_id) j["object_id"] = *b.object_id;
    if (b.score) j["score"] = *b.score;
    return j;
}

BBox2D box_from_json(const json& j) {
    BBox2D b;
    b.u_min = j.at("u_min").get<double>();
    b.v_min = j.at("v_min").get<double>();
    b.u_max = j.at("u_max").get<double>();
    b.v_max = j.at("v_max").get<double>();
    if (j.contains("object_id")) b.object_id = j["object_id"].get<int>();
    if (j.contains("score")) b.score = j["score"].get<double>();
    return b;
}

}  // namespace

std::string frame_to_json_line(const Frame& frame) {
    json j;
    j["schema"] = kSchema;
    j["frame_id"] = frame.frame_id;
    j["seed"] = frame.seed;
    j["difficulty"] = to_string(frame.difficulty);
    json& cal = j["calibration"];
    cal["fx"] = frame.intrinsics.fx;
    cal["fy"] = frame.intrinsics.fy;
    cal["px"] = frame.intrinsics.px;
    cal["py"] = frame.intrinsics.py;
    cal["sign_convention"] = geom::to_string(frame.intrinsics.sign_convention);
    cal["R"] = frame.extrinsics.R;
    cal["t"] = frame.extrinsics.t;
    j["objects"] = json::array();
    for (const ObjectGT& o : frame.objects) {
        j["objects"].push_back({{"id", o.id},
                                {"center_r", o.center_r},
                                {"center_a", o.center_a},
                                {"length", o.length},
                                {"width_deg", o.width_deg},
                                {"velocity", o.velocity},
                                {"z_height", o.z_height}});
    }
    j["points"] = json::array();
    for (const auto& p : frame.points) {
        j["points"].push_back({{"r", p.r},
                               {"a", p.a},
                               {"d", p.d},
                               {"u", p.u},
                               {"v", p.v},
                               {"x", p.x},
                               {"y", p.y},
                               {"z", p.z}});
    }
    j["gt_boxes"] = json::array();
    for (const BBox2D& b : frame.gt_boxes) j["gt_boxes"].push_back(box_to_json(b));
    j["detector_boxes"] = json::array();
    for (const BBox2D& b : frame.detector_boxes) j["detector_boxes"].push_back(box_to_json(b));
    return j.dump();
}

Frame frame_from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("frame: JSON parse error: ") + e.what());
    }
    if (j.value("schema", "") != kSchema) {
        throw IoError("frame: unknown schema '" + j.value("schema", std::string("<missing>")) +
                      "'");
    }
    Frame f;
    try {
        f.frame_id = j.at("frame_id").get<std::int64_t>();
        f.seed = j.at("seed").get<std::uint64_t>();
        f.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
        const json& cal = j.at("calibration");
        f.intrinsics.fx = cal.at("fx").get<double>();
        f.intrinsics.fy = cal.at("fy").get<double>();
        f.intrinsics.px = cal.at("px").get<double>();
        f.intrinsics.py = cal.at("py").get<double>();
        f.intrinsics.sign_convention =
            geom::sign_convention_from_string(cal.at("sign_convention").get<std::string>());
        const json& R = cal.at("R");
        for (int i = 0; i < 9; ++i) f.extrinsics.R[i] = R.at(i).get<double>();
        const json& t = cal.at("t");
        for (int i = 0; i < 3; ++i) f.extrinsics.t[i] = t.at(i).get<double>();
        for (const json& o : j.at("objects")) {
            ObjectGT obj;
            obj.id = o.at("id").get<int>();
            obj.center_r = o.at("center_r").get<double>();
            obj.center_a = o.at("center_a").get<double>();
            obj.length = o.at("length").get<double>();
            obj.width_deg = o.at("width_deg").get<double>();
            obj.velocity = o.at("velocity").get<double>();
            obj.z_height = o.at("z_height").get<double>();
            f.objects.push_back(obj);
        }
        for (const json& p : j.at("points")) {
            geom::RadarPoint pt;
            pt.r = p.at("r").get<double>();
            pt.a = p.at("a").get<double>();
            pt.d = p.at("d").get<double>();
            pt.u = p.at("u").get<double>();
            pt.v = p.at("v").get<double>();
            pt.x = p.at("x").get<double>();
            pt.y = p.at("y").get<double>();
            pt.z = p.at("z").get<double>();
            f.points.push_back(pt);
        }
        for (const json& b : j.at("gt_boxes")) f.gt_boxes.push_back(box_from_json(b));
        for (const json& b : j.at("detector_boxes")) f.detector_boxes.push_back(box_from_json(b));
    } catch (const json::exception& e) {
        throw IoError(std::string("frame: malformed record: ") + e.what());
    }
    return f;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out << text;
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_frames(const std::string& path, const std::vector<Frame>& frames) {
    std::string text;
    for (const Frame& f : frames) {
        text += frame_to_json_line(f);
        text += '\n';
    }
    write_text_atomic(path, text);
}

std::vector<Frame> read_frames(const std::string& path, const sim::SimConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Frame> frames;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Frame f = frame_from_json_line(line);
        sim::synth_features(f, cfg);
        frames.push_back(std::move(f));
    }
    return frames;
}

std::uint64_t hash_file(const std::string& path) {
    const std::string text = read_text(path);
    return fnv1a64(text.data(), text.size());
}

}  // namespace rofusion::io
