"""
geometry 测试
"""
