#include "tailmix/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "tailmix/errors.hpp"

namespace tailmix {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == delimiter) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

LossSample read_loss_csv(std::istream& in, const std::string& loss_column,
                         const std::string& group_column, char delimiter) {
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw InputError("empty input", 1);
    ++line_no;

    const auto header = split_line(line, delimiter);
    long loss_idx = -1, group_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        if (name == loss_column) loss_idx = static_cast<long>(i);
        if (!group_column.empty() && name == group_column) group_idx = static_cast<long>(i);
    }
    if (loss_idx < 0) throw InputError("loss column '" + loss_column + "' not found in header", 1);
    if (!group_column.empty() && group_idx < 0) {
        throw InputError("group column '" + group_column + "' not found in header", 1);
    }

    std::vector<double> values;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line, delimiter);
        if (static_cast<long>(fields.size()) <= loss_idx ||
            (group_idx >= 0 && static_cast<long>(fields.size()) <= group_idx)) {
            throw InputError("too few fields", line_no);
        }
        const std::string raw = trim(fields[static_cast<std::size_t>(loss_idx)]);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
        if (ec != std::errc() || ptr != raw.data() + raw.size()) {
            throw InputError("cannot parse loss value '" + raw + "'", line_no);
        }
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw InputError("loss value must be a positive finite number, got '" + raw + "'",
                             line_no);
        }
        values.push_back(value);
        if (group_idx >= 0) labels.push_back(trim(fields[static_cast<std::size_t>(group_idx)]));
    }
    if (values.empty()) throw InputError("no data rows", line_no);

    Eigen::ArrayXd arr =
        Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return LossSample(std::move(arr), std::move(labels));
}

LossSample read_loss_csv(const std::string& path, const std::string& loss_column,
                         const std::string& group_column, char delimiter) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_loss_csv(in, loss_column, group_column, delimiter);
}

}  // namespace tailmix
