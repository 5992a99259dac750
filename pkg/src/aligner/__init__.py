"""词形规范化、对齐与错误统计包"""
