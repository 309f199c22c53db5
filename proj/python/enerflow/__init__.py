# Copyright 2026 The Enerflow Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Energy-aware graph substitution and algorithm assignment."""

from ._enerflow import (
    CostDatabase,
    Error,
    Graph,
    generate_model,
    inner_search,
    load_database,
    load_graph,
    metrics,
    optimize,
    persist,
    profile,
    run_cli,
    save_graph,
)

__all__ = [
    "CostDatabase",
    "Error",
    "Graph",
    "generate_model",
    "inner_search",
    "load_database",
    "load_graph",
    "metrics",
    "optimize",
    "persist",
    "profile",
    "run_cli",
    "save_graph",
]
