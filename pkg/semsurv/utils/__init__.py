from semsurv.utils._config_parse import get_numeric, parse_config_text, read_config_file
