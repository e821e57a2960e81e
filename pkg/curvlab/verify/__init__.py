"""
验证套件与命令行
"""
