SCHEMA_VERSION = 1


class ReportSchemaError(ValueError):
    """A report does not match the schema for its kind."""


class ReportValidator:

    REQUIRED_FIELDS = {
        "schema_version": int,
        "kind": str,
        "provenance": dict,
        "summary": dict,
        "rows": list,
        "violation": bool,
    }

    PROVENANCE_FIELDS = {
        "version": str,
        "seed": int,
        "config_hash": str,
    }

    # summary keys each kind must carry, by schema version
    SUMMARY_FIELDS = {
        1: {
            "simulate":            ("n", "T", "phases", "tau", "max_modifications", "rewiring_threshold"),
            "profile":             ("n", "kmax", "phi_ratio_half"),
            "verify-spread":       ("family", "instances", "violations", "min_slack"),
            "verify-collapse":     ("family", "instances", "violations", "min_slack"),
            "verify-majorization": ("family", "instances", "skipped", "violations"),
            "paths":               ("n", "K", "coverage", "max_node_visits", "visit_threshold", "mixing_budget_T"),
            "bootstrap":           ("n", "gamma", "phases", "base_case_holds", "expander_phase", "max_modifications"),
            "uniformity":          ("n", "T", "replicas", "statistic", "p_value", "passed"),
            "duality":             ("n", "set_size", "T", "replicas", "max_deviation", "envelope", "passed"),
            "meancut":             ("n", "set_size", "T", "mean_cut", "cut_bound", "cut_ratio", "passed"),
        },
    }

    def validate(self, data):

        if not isinstance(data, dict):
            raise ReportSchemaError("Report must be a dictionary.")

        self._check_fields(data, self.REQUIRED_FIELDS, "")
        self._check_fields(data["provenance"], self.PROVENANCE_FIELDS, "provenance.")

        version = data["schema_version"]
        if version not in self.SUMMARY_FIELDS:
            raise ReportSchemaError(f"Unsupported schema_version: {version}")

        kinds = self.SUMMARY_FIELDS[version]
        if data["kind"] not in kinds:
            raise ReportSchemaError(f"Unknown report kind: {data['kind']}")

        for key in kinds[data["kind"]]:
            if key not in data["summary"]:
                raise ReportSchemaError(f"Missing required field: summary.{key}")

        for i, row in enumerate(data["rows"]):
            if not isinstance(row, dict):
                raise ReportSchemaError(f"Row {i} must be a dictionary.")

    def _check_fields(self, data, fields, prefix):
        for field, field_type in fields.items():
            if field not in data:
                raise ReportSchemaError(f"Missing required field: {prefix}{field}")

            value = data[field]
            # bool is an int subclass; keep the two apart
            if field_type is int and isinstance(value, bool):
                raise ReportSchemaError(f"Field '{prefix}{field}' must be of type int")
            if not isinstance(value, field_type):
                raise ReportSchemaError(
                    f"Field '{prefix}{field}' must be of type {field_type.__name__}"
                )
