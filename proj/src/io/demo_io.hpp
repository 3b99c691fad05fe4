#pragma once

#include <string>

#include "core/types.hpp"

namespace phaseseg {

// CSV schema: header t,x,y,z[,rx,ry,rz],fx,fy,fz[,tx,ty,tz]; one sample per
// row, doubles printed with %.17g. Rotation and torque columns appear only for
// 6-D data and must come as complete triples.
Demonstration read_demo_csv(const std::string& path);
void write_demo_csv(const Demonstration& demo, const std::string& path);

// JSONL schema: one object per line with the same keys as the CSV columns.
Demonstration read_demo_jsonl(const std::string& path);

// Dispatches on the file extension (.csv or .jsonl).
Demonstration read_demo(const std::string& path);

// Sidecar label files: header t,label with 1-based phase or regime ids.
// Loading converts to the 0-based internal convention.
void write_labels_csv(const Demonstration& demo, const std::vector<int>& labels0,
                      const std::string& path);
std::vector<int> read_labels_csv(const std::string& path);

}  // namespace phaseseg
