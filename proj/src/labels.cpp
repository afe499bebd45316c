#include "geoclust/labels.hpp"

#include <fstream>

#include "json.hpp"

namespace geoclust {

void LabelGrid::validate() const {
    if (rows < 1 || cols < 1) throw DataError("label grid dimensions must be >= 1");
    if (labels.size() != rows * cols)
        throw DataError("label count does not match rows*cols");
}

LabelGrid read_label_grid(const std::filesystem::path& dir) {
    const auto header_path = dir / "header.json";
    const auto labels_path = dir / "labels.bin";
    if (!std::filesystem::exists(header_path))
        throw DataError("missing " + header_path.string());
    if (!std::filesystem::exists(labels_path))
        throw DataError("missing " + labels_path.string());

    nlohmann::json header;
    try {
        std::ifstream in(header_path);
        header = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed header.json: " + std::string(e.what()));
    }

    LabelGrid grid;
    try {
        grid.rows = header.at("rows").get<std::size_t>();
        grid.cols = header.at("cols").get<std::size_t>();
        if (header.at("dtype").get<std::string>() != "u16le")
            throw DataError("unsupported dtype, expected \"u16le\"");
        if (header.contains("palette")) {
            Palette pal;
            for (const auto& e : header["palette"]) {
                auto v = e.get<std::vector<int>>();
                if (v.size() != 3) throw DataError("palette entries must be [r,g,b]");
                pal.push_back({static_cast<std::uint8_t>(v[0]),
                               static_cast<std::uint8_t>(v[1]),
                               static_cast<std::uint8_t>(v[2])});
            }
            grid.palette = std::move(pal);
        }
        if (header.contains("geotransform")) {
            auto gt = header["geotransform"].get<std::vector<double>>();
            if (gt.size() != 6) throw DataError("geotransform must have 6 entries");
            std::array<double, 6> a;
            std::copy(gt.begin(), gt.end(), a.begin());
            grid.geotransform = a;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed header.json: " + std::string(e.what()));
    }

    std::ifstream in(labels_path, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() != grid.rows * grid.cols * 2)
        throw DataError("labels.bin size mismatch");
    grid.labels.resize(grid.rows * grid.cols);
    for (std::size_t i = 0; i < grid.labels.size(); ++i)
        grid.labels[i] = static_cast<std::uint16_t>(bytes[2 * i]) |
                         static_cast<std::uint16_t>(bytes[2 * i + 1]) << 8;
    grid.validate();
    return grid;
}

void write_label_grid(const LabelGrid& grid, const std::filesystem::path& dir) {
    grid.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    nlohmann::json header;
    header["rows"] = grid.rows;
    header["cols"] = grid.cols;
    header["dtype"] = "u16le";
    if (grid.palette) {
        nlohmann::json pal = nlohmann::json::array();
        for (const auto& rgb : *grid.palette)
            pal.push_back({rgb[0], rgb[1], rgb[2]});
        header["palette"] = pal;
    }
    if (grid.geotransform)
        header["geotransform"] = std::vector<double>(grid.geotransform->begin(),
                                                     grid.geotransform->end());

    std::ofstream hout(dir / "header.json", std::ios::binary);
    if (!hout) throw DataError("cannot write " + (dir / "header.json").string());
    hout << header.dump(2) << "\n";

    std::vector<std::uint8_t> bytes(grid.labels.size() * 2);
    for (std::size_t i = 0; i < grid.labels.size(); ++i) {
        bytes[2 * i] = static_cast<std::uint8_t>(grid.labels[i] & 0xff);
        bytes[2 * i + 1] = static_cast<std::uint8_t>(grid.labels[i] >> 8);
    }
    std::ofstream bout(dir / "labels.bin", std::ios::binary);
    if (!bout) throw DataError("cannot write " + (dir / "labels.bin").string());
    bout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

}  // namespace geoclust
