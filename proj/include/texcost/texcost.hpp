#pragma once

#include "texcost/amlf.hpp"
#include "texcost/config.hpp"
#include "texcost/cost.hpp"
#include "texcost/dataset.hpp"
#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/image.hpp"
#include "texcost/model_io.hpp"
#include "texcost/pipeline.hpp"
#include "texcost/probability.hpp"
#include "texcost/report.hpp"
#include "texcost/slf.hpp"
#include "texcost/svm.hpp"
